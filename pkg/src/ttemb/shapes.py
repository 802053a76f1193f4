"""Factorization search: pick mode shapes for a given embedding dimension.

Enumerates ordered factorizations of d, predicts tensor-train storage for
each, and exposes three planning policies: maximum compression (the full
prime factorization), a target tensor order, or an explicit caller shape.
Brute-force enumeration doubles as the verification path for the claim
that all-2 factors minimize storage at rank 1 (ties included).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InfeasibleOrder, ShapeMismatch
from .ttsvd import structural_max_ranks

# Embedding dims in scope stay below ~13k, whose prime factorizations never
# exceed this order.
DEFAULT_MAX_ORDER = 16


def prime_factors(d: int) -> list[int]:
    """Prime factorization of d in ascending order (d >= 1)."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    out = []
    n = d
    f = 2
    while f * f <= n:
        while n % f == 0:
            out.append(f)
            n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def enumerate_factorizations(d: int, max_order: int = DEFAULT_MAX_ORDER) -> list[tuple[int, ...]]:
    """All ordered factorizations of d into factors >= 2, length <= max_order.

    Includes the trivial single-factor shape (d,).  Deterministic: results
    are sorted lexicographically and contain each factorization exactly once.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")

    def rec(n: int, slots: int) -> Iterable[tuple[int, ...]]:
        if slots >= 1:
            yield (n,)
        if slots < 2:
            return
        for f in range(2, n // 2 + 1):
            if n % f == 0:
                for rest in rec(n // f, slots - 1):
                    yield (f, *rest)

    return sorted(set(rec(d, max_order)))


def storage_for(shape: Sequence[int], interior_ranks: Sequence[int]) -> int:
    """Core storage sum r_{k-1} I_k r_k with boundary ranks fixed at 1."""
    shape = tuple(shape)
    ranks = (1, *tuple(int(r) for r in interior_ranks), 1)
    if len(ranks) != len(shape) + 1:
        raise ShapeMismatch(
            f"need {len(shape) - 1} interior ranks for shape {shape}, got {len(interior_ranks)}"
        )
    return sum(ranks[k] * shape[k] * ranks[k + 1] for k in range(len(shape)))


def clipped_uniform_ranks(shape: Sequence[int], r: int) -> tuple[int, ...]:
    """Interior ranks min(r, structural max) at every position."""
    return tuple(min(r, m) for m in structural_max_ranks(shape))


def uniform_storage(mode_size: int, order: int, r: int) -> int:
    """Closed-form storage for an order-N shape with all modes I and rank r.

    Equals 2 I r + (N - 2) I r^2 for N >= 2 (boundary cores I*r, interior
    cores r*I*r), and just I for N = 1.
    """
    if order == 1:
        return mode_size
    return 2 * mode_size * r + (order - 2) * mode_size * r * r


def optimal_shapes(d: int, r: int, max_order: int = DEFAULT_MAX_ORDER) -> set[tuple[int, ...]]:
    """Exhaustive argmin set of storage over all factorizations of d.

    Interior ranks are the uniform rank r clipped to the structural max.
    Ties are preserved: every shape attaining the minimum is returned.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    best: set[tuple[int, ...]] = set()
    best_cost = None
    for shape in enumerate_factorizations(d, max_order):
        cost = storage_for(shape, clipped_uniform_ranks(shape, r))
        if best_cost is None or cost < best_cost:
            best, best_cost = {shape}, cost
        elif cost == best_cost:
            best.add(shape)
    return best


@dataclass(frozen=True)
class ShapePlan:
    """A chosen factorization with its predicted storage at the cap ranks."""

    shape: tuple[int, ...]
    rank_caps: tuple[int, ...]
    predicted_params: int
    predicted_eta: float
    epsilon: float = 0.0

    @property
    def d(self) -> int:
        return math.prod(self.shape)


def _balanced_shape(d: int, order: int, max_order: int) -> tuple[int, ...]:
    candidates = [s for s in enumerate_factorizations(d, max_order) if len(s) == order]
    if not candidates:
        raise InfeasibleOrder(f"no factorization of {d} into {order} factors >= 2")
    best_max = min(max(s) for s in candidates)
    # Lexicographically smallest among the most balanced, for determinism.
    return min(s for s in candidates if max(s) == best_max)


def plan(
    d: int,
    policy: str = "max",
    *,
    order: int | None = None,
    shape: Sequence[int] | None = None,
    rank_cap: int = 1,
    epsilon: float = 0.0,
    max_order: int = DEFAULT_MAX_ORDER,
) -> ShapePlan:
    """Build a ShapePlan for dimension d.

    policy "max" takes the full prime factorization sorted ascending (the
    highest-compression shape at rank 1, all 2s when d is a power of two);
    "order" takes the most balanced factorization of the given length
    (minimizing the largest mode); "explicit" validates the caller's shape.
    rank_cap is the uniform interior cap used for the storage prediction,
    clipped to the structural maximum per position; the default of 1 is the
    maximum-compression setting.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if d == 1:
        return ShapePlan((1,), (), 1, 0.0, epsilon)

    if policy == "max":
        chosen = tuple(prime_factors(d))
    elif policy == "order":
        if order is None or order < 1:
            raise InfeasibleOrder(f"target order must be a positive integer, got {order}")
        chosen = (d,) if order == 1 else _balanced_shape(d, order, max_order)
    elif policy == "explicit":
        if shape is None:
            raise ShapeMismatch("explicit policy requires a shape")
        chosen = tuple(int(s) for s in shape)
        if math.prod(chosen) != d:
            raise ShapeMismatch(f"prod{chosen} = {math.prod(chosen)} != d = {d}")
        if any(s < 1 for s in chosen):
            raise ShapeMismatch(f"invalid shape {chosen}")
    else:
        raise ValueError(f"unknown policy {policy!r}")

    if rank_cap < 1:
        raise ValueError(f"rank_cap must be >= 1, got {rank_cap}")
    caps = tuple(min(rank_cap, m) for m in structural_max_ranks(chosen))
    params = storage_for(chosen, caps)
    return ShapePlan(chosen, caps, params, d / params - 1.0, epsilon)
