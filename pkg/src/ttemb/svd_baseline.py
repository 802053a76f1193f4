"""Whole-table low-rank factorization, the comparison baseline.

Unlike the per-vector tensor-train path, this factors the entire V x d
embedding table once.  Storage is k (V + d); a row lookup is one
matrix-vector product; adding a token means refactorizing the whole table,
which is exactly the adaptivity gap the per-vector path avoids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure, RankOutOfRange, TokenOutOfRange


@dataclass
class LowRankTable:
    """Rank-k factorization of a V x d table.

    Singular values are folded into ``col_factors`` so a lookup is a single
    product ``row_factors[i] @ col_factors``.
    """

    row_factors: np.ndarray = field(repr=False)  # V x k
    col_factors: np.ndarray = field(repr=False)  # k x d
    k: int

    @property
    def vocab_size(self) -> int:
        return self.row_factors.shape[0]

    @property
    def dim(self) -> int:
        return self.col_factors.shape[1]

    @property
    def param_count(self) -> int:
        return self.k * (self.vocab_size + self.dim)

    @property
    def lookup_flops(self) -> int:
        """Multiply-adds per row reconstruction: 2 d k - d."""
        return 2 * self.dim * self.k - self.dim


def compress_table(table: np.ndarray, k: int) -> LowRankTable:
    """Best rank-k approximation of the table in Frobenius norm."""
    table = np.asarray(table, dtype=np.float64)
    if table.ndim != 2:
        raise RankOutOfRange(f"expected a 2-d table, got shape {table.shape}")
    v, d = table.shape
    if not 1 <= k <= min(v, d):
        raise RankOutOfRange(f"k = {k} outside 1..min({v}, {d})")
    try:
        u, s, vh = np.linalg.svd(table, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return LowRankTable(row_factors=u[:, :k].copy(), col_factors=s[:k, None] * vh[:k], k=k)


def lookup_row(t: LowRankTable, i: int) -> np.ndarray:
    """Reconstruct row i of the original table."""
    if not 0 <= i < t.vocab_size:
        raise TokenOutOfRange(f"row {i} outside 0..{t.vocab_size - 1}")
    return t.row_factors[i] @ t.col_factors


def lrt1_summary(t: LowRankTable) -> str:
    """One-line LRT1 section for stats / bench outputs."""
    return f"LRT1 V={t.vocab_size} d={t.dim} k={t.k} params={t.param_count}"
