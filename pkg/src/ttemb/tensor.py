"""Dense order-N tensors with explicit little-endian index semantics.

Every tensor in this package is a flat array plus a shape.  The layout is
little-endian: the first index varies fastest, so the entry at 1-based
multi-index (i_1, ..., i_N) sits at flat offset

    sum_k (i_k - 1) * prod_{p<k} I_p .

numpy's Fortran order implements exactly this convention, which is why all
reshapes below pass ``order="F"``.  No other layout is configurable; the
binary file formats depend on it being bit-stable.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, ModeOutOfRange, ShapeMismatch

# Orders above this are out of scope for the toolkit.
MAX_ORDER = 16


class Tensor:
    """Immutable dense tensor of 64-bit floats.

    Attributes
    ----------
    shape:
        Tuple of mode sizes (I_1, ..., I_N), each >= 1.
    data:
        Flat numpy array of length prod(shape) in little-endian linear
        order.  Marked read-only after construction; operations return new
        tensors, so values are safe to share across threads.
    """

    __slots__ = ("shape", "data")

    def __init__(self, shape: Sequence[int], data: np.ndarray, copy: bool = True):
        shape = tuple(int(s) for s in shape)
        if len(shape) > MAX_ORDER:
            raise ShapeMismatch(f"order {len(shape)} exceeds the supported maximum {MAX_ORDER}")
        if any(s < 1 for s in shape):
            raise ShapeMismatch(f"every mode size must be >= 1, got {shape}")
        arr = np.array(data, dtype=np.float64, copy=copy).ravel()
        if arr.size != math.prod(shape):
            raise ShapeMismatch(
                f"data length {arr.size} does not match prod{shape} = {math.prod(shape)}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def order(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return self.data.size

    def entry(self, *indices: int) -> float:
        """1-based entry accessor, evaluating the folding index formula."""
        if len(indices) != self.order:
            raise ModeOutOfRange(f"expected {self.order} indices, got {len(indices)}")
        offset = 0
        stride = 1
        for i, size in zip(indices, self.shape):
            if not 1 <= i <= size:
                raise ModeOutOfRange(f"index {i} outside 1..{size}")
            offset += (i - 1) * stride
            stride *= size
        return float(self.data[offset])

    def as_ndarray(self) -> np.ndarray:
        """Read-only N-d view of the data, first index fastest."""
        return self.data.reshape(self.shape, order="F")

    def norm(self) -> float:
        """Frobenius norm of all entries."""
        return float(np.linalg.norm(self.data))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


def tensorize(vector: Sequence[float] | np.ndarray, shape: Sequence[int]) -> Tensor:
    """Fold a length-d vector into an order-N tensor.

    The product of ``shape`` must equal the vector length; the entry map is
    the little-endian folding formula, so ``tensorize`` followed by
    :func:`vectorize` is the identity.
    """
    vec = np.asarray(vector, dtype=np.float64).ravel()
    shape = tuple(int(s) for s in shape)
    if math.prod(shape) != vec.size:
        raise ShapeMismatch(f"prod{shape} = {math.prod(shape)} != vector length {vec.size}")
    return Tensor(shape, vec)


def vectorize(t: Tensor) -> np.ndarray:
    """Unfold a tensor back into its flat little-endian vector."""
    return t.data.copy()


def matricize(t: Tensor, n: int) -> np.ndarray:
    """Mode-n unfolding: an I_n x (prod of the remaining modes) matrix.

    Columns are the mode-n fibers, ordered by the little-endian linear
    index over the remaining modes in their original relative order.
    """
    if not 1 <= n <= t.order:
        raise ModeOutOfRange(f"mode {n} outside 1..{t.order}")
    arr = np.moveaxis(t.as_ndarray(), n - 1, 0)
    return arr.reshape(t.shape[n - 1], -1, order="F").copy()


def contract(a: Tensor, b: Tensor, k: int, p: int) -> Tensor:
    """Contract mode k of ``a`` with mode p of ``b``.

    The result has order N + M - 2 with the surviving modes of ``a`` first
    (in order) followed by the surviving modes of ``b``.
    """
    if not 1 <= k <= a.order:
        raise ModeOutOfRange(f"mode {k} outside 1..{a.order}")
    if not 1 <= p <= b.order:
        raise ModeOutOfRange(f"mode {p} outside 1..{b.order}")
    if a.shape[k - 1] != b.shape[p - 1]:
        raise DimensionMismatch(
            f"mode sizes differ: {a.shape[k - 1]} (mode {k} of a) vs "
            f"{b.shape[p - 1]} (mode {p} of b)"
        )
    out = np.tensordot(a.as_ndarray(), b.as_ndarray(), axes=(k - 1, p - 1))
    return Tensor(out.shape, out.ravel(order="F"))
