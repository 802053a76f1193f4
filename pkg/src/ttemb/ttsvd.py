"""Per-vector tensor-train compression and matrix-product-state reconstruction.

A length-d embedding vector is folded into an order-N tensor and decomposed
into N third-order cores G_k of shape (r_{k-1}, I_k, r_k) with boundary
ranks r_0 = r_N = 1.  Compression runs a chain of delta-truncated SVDs on
successive unfoldings; reconstruction contracts the cores left to right and
unfolds the result back into a vector.  With accuracy target eps and
per-step budget delta = eps / sqrt(N - 1) * ||x||, the reconstruction error
is bounded by eps * ||x|| whenever no rank cap binds.

All math is 64-bit; narrowing to 32-bit happens only at the storage
boundary (see :mod:`ttemb.store`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericalFailure, ShapeMismatch


def structural_max_ranks(shape: Sequence[int]) -> tuple[int, ...]:
    """Largest attainable interior ranks (r_1, ..., r_{N-1}) for a shape.

    The rank between modes k and k+1 can never exceed
    min(prod_{j<=k} I_j, prod_{j>k} I_j); a truncation cap above that value
    is never realized.
    """
    shape = tuple(shape)
    n = len(shape)
    out = []
    left = 1
    for k in range(1, n):
        left *= shape[k - 1]
        right = math.prod(shape[k:])
        out.append(min(left, right))
    return tuple(out)


@dataclass(frozen=True)
class CompressSpec:
    """Compression parameters shared by every vector of one vocabulary.

    shape:
        Mode sizes (I_1, ..., I_N) whose product equals the embedding dim.
    max_ranks:
        Upper bounds for the interior ranks (r_1, ..., r_{N-1}).
    epsilon:
        Relative approximation accuracy, >= 0.  Zero keeps every singular
        value above numerical noise.
    """

    shape: tuple[int, ...]
    max_ranks: tuple[int, ...]
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "max_ranks", tuple(int(r) for r in self.max_ranks))
        if len(self.shape) < 1 or any(s < 1 for s in self.shape):
            raise ShapeMismatch(f"invalid shape {self.shape}")
        if len(self.shape) > 16:
            raise ShapeMismatch(f"order {len(self.shape)} exceeds the supported maximum 16")
        if len(self.max_ranks) != len(self.shape) - 1:
            raise ShapeMismatch(
                f"need {len(self.shape) - 1} interior rank caps, got {len(self.max_ranks)}"
            )
        if any(r < 1 for r in self.max_ranks):
            raise ShapeMismatch("rank caps must be >= 1")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ShapeMismatch(f"epsilon must be finite and >= 0, got {self.epsilon}")

    @classmethod
    def lossless(cls, shape: Sequence[int]) -> "CompressSpec":
        """Settings for exact compression: eps = 0, caps at the structural maximum."""
        shape = tuple(shape)
        return cls(shape=shape, max_ranks=structural_max_ranks(shape), epsilon=0.0)

    @property
    def d(self) -> int:
        return math.prod(self.shape)


@dataclass
class TTVector:
    """One compressed embedding: tensor-train cores plus their rank chain.

    cores[k] has shape (ranks[k], shape[k], ranks[k+1]); the boundary ranks
    are always 1.  Cores are float64 and should be treated as immutable.
    """

    shape: tuple[int, ...]
    ranks: tuple[int, ...]
    cores: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        self.ranks = tuple(int(r) for r in self.ranks)
        n = len(self.shape)
        if len(self.ranks) != n + 1:
            raise ShapeMismatch(f"need {n + 1} ranks for order {n}, got {len(self.ranks)}")
        if self.ranks[0] != 1 or self.ranks[-1] != 1:
            raise ShapeMismatch(f"boundary ranks must be 1, got {self.ranks}")
        if len(self.cores) != n:
            raise ShapeMismatch(f"need {n} cores, got {len(self.cores)}")
        for k, core in enumerate(self.cores):
            want = (self.ranks[k], self.shape[k], self.ranks[k + 1])
            if core.shape != want:
                raise ShapeMismatch(f"core {k + 1} has shape {core.shape}, expected {want}")

    @property
    def order(self) -> int:
        return len(self.shape)

    @property
    def source_dim(self) -> int:
        return math.prod(self.shape)


def truncated_svd(
    m: np.ndarray, delta: float, max_rank: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Rank-truncated SVD with an absolute Frobenius error budget.

    Returns ``(U, S, V, r)`` with ``m ~= U @ diag(S) @ V.T`` where r is the
    smallest rank <= max_rank whose discarded tail satisfies
    ||tail||_F <= delta, or max_rank if the budget cannot be met.  Singular
    values at noise level (relative to S[0]) are always discarded, so an
    exactly low-rank input yields its true rank even at delta = 0.  Equal
    singular values are never split across the truncation boundary: keeping
    more mass can only tighten the error, never exceed the budget.

    Raises
    ------
    NumericalFailure
        If the underlying SVD iteration does not converge.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a nonempty matrix, got shape {m.shape}")
    if not (math.isfinite(delta) and delta >= 0.0):
        raise ValueError(f"delta must be finite and >= 0, got {delta}")
    if max_rank < 1:
        raise ValueError(f"max_rank must be >= 1, got {max_rank}")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc

    # Tail norms: tail_sq[r] = sum of squared singular values after keeping r.
    tail_sq = np.concatenate([np.cumsum((s * s)[::-1])[::-1], [0.0]])
    noise_floor = np.finfo(np.float64).eps * max(m.shape) * (s[0] if s.size else 0.0)
    budget = max(delta, noise_floor)

    limit = min(max_rank, s.size)
    r = limit
    for cand in range(0, limit):
        if math.sqrt(tail_sq[cand]) <= budget:
            r = cand
            break
    # Keep ties: never drop a singular value equal to the last kept one.
    while r < limit and r >= 1 and s[r] == s[r - 1]:
        r += 1
    r = max(r, 1)
    return u[:, :r].copy(), s[:r].copy(), vh[:r].T.copy(), r


def tt_svd(x: Sequence[float] | np.ndarray, spec: CompressSpec) -> TTVector:
    """Compress a single vector into tensor-train cores.

    Folds ``x`` to ``spec.shape``, then sweeps k = 1..N-1: unfold the
    remainder to (r_{k-1} I_k) x (prod_{j>k} I_j), truncate its SVD with
    budget delta = eps / sqrt(N-1) * ||x|| capped at ``spec.max_ranks[k]``,
    fold U into core k, and carry S V^T forward.  The final remainder
    becomes core N.  Guarantees ||x - reconstruct(...)||_2 <= eps ||x||_2
    whenever no rank cap binds.
    """
    vec = np.asarray(x, dtype=np.float64).ravel()
    if vec.size != spec.d:
        raise ShapeMismatch(f"vector length {vec.size} != prod{spec.shape} = {spec.d}")
    shape = spec.shape
    n = len(shape)

    if n == 1:
        return TTVector(shape, (1, 1), [vec.reshape(1, shape[0], 1)])

    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # Zero vector: delta would be 0/0-free but cores degenerate; return
        # the canonical all-zero train with unit ranks.
        cores = [np.zeros((1, size, 1)) for size in shape]
        return TTVector(shape, (1,) * (n + 1), cores)

    delta = spec.epsilon / math.sqrt(n - 1) * norm
    ranks = [1]
    cores: list[np.ndarray] = []
    z = vec.reshape(shape[0], -1, order="F")
    for k in range(1, n):
        u, s, v, r = truncated_svd(z, delta, spec.max_ranks[k - 1])
        cores.append(u.reshape(ranks[-1], shape[k - 1], r, order="F"))
        ranks.append(r)
        z = (s[:, None] * v.T).reshape(r * shape[k], -1, order="F")
    cores.append(z.reshape(ranks[-1], shape[-1], 1, order="F"))
    ranks.append(1)
    return TTVector(shape, tuple(ranks), cores)


def reconstruct(tt: TTVector) -> np.ndarray:
    """Contract the core chain back into the original length-d vector.

    Runs the left-to-right chain, contracting the trailing rank mode of the
    running product with the leading rank mode of the next core, then
    unfolds little-endian.
    """
    first = tt.cores[0]
    acc = first.reshape(tt.shape[0], tt.ranks[1], order="F")
    for k in range(1, tt.order):
        core = tt.cores[k].reshape(tt.ranks[k], tt.shape[k] * tt.ranks[k + 1], order="F")
        acc = (acc @ core).reshape(-1, tt.ranks[k + 1], order="F")
    return acc.ravel(order="F")


def param_count(tt: TTVector) -> int:
    """Total scalars stored: sum over cores of r_{k-1} * I_k * r_k."""
    return sum(core.size for core in tt.cores)


def compression_ratio(tt: TTVector, d: int | None = None) -> float:
    """Per-vector compression ratio d / params - 1 (0 means no saving)."""
    if d is None:
        d = tt.source_dim
    return d / param_count(tt) - 1.0


def reconstruction_flops(tt: TTVector) -> int:
    """Exact multiply-add count of the reconstruction chain.

    Step k of the chain multiplies a (prod_{j<k} I_j) x r_{k-1} block by an
    r_{k-1} x (I_k r_k) block: 2 * prod_{j<k} I_j * r_{k-1} * I_k * r_k
    scalar operations, counting one multiply and one add each.
    """
    total = 0
    left = tt.shape[0]
    for k in range(1, tt.order):
        total += 2 * left * tt.ranks[k] * tt.shape[k] * tt.ranks[k + 1]
        left *= tt.shape[k]
    return total


def contraction_chain_length(tt: TTVector) -> int:
    """Number of serial matrix multiplications in reconstruction: N - 1."""
    return tt.order - 1
