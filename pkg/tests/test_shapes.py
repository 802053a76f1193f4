import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttemb.errors import InfeasibleOrder, ShapeMismatch
from ttemb.shapes import (
    clipped_uniform_ranks,
    enumerate_factorizations,
    optimal_shapes,
    plan,
    prime_factors,
    storage_for,
    uniform_storage,
)
from ttemb.ttsvd import CompressSpec, param_count, structural_max_ranks, tt_svd

import numpy as np


def test_enumerate_sixteen():
    shapes = enumerate_factorizations(16, max_order=4)
    expected = {(16,), (2, 8), (8, 2), (4, 4), (2, 2, 4), (2, 4, 2), (4, 2, 2), (2, 2, 2, 2)}
    assert set(shapes) == expected
    assert shapes == sorted(shapes)


def test_enumerate_prime_only_trivial():
    assert enumerate_factorizations(13) == [(13,)]


def test_enumerate_27_has_cube_and_no_factor_two():
    shapes = enumerate_factorizations(27)
    assert (3, 3, 3) in shapes
    assert all(2 not in s for s in shapes)


def test_enumerate_respects_max_order():
    shapes = enumerate_factorizations(16, max_order=2)
    assert max(len(s) for s in shapes) == 2


@given(st.integers(2, 400))
@settings(max_examples=60, deadline=None)
def test_enumerated_shapes_multiply_back(d):
    shapes = enumerate_factorizations(d, max_order=8)
    assert (d,) in shapes
    for s in shapes:
        assert math.prod(s) == d
        assert all(f >= 2 for f in s)
    assert len(set(shapes)) == len(shapes)


def test_storage_examples():
    assert storage_for((3, 3, 3), (1, 1)) == 9
    assert storage_for((8, 8, 12), (4, 4)) == 208
    assert storage_for((27,), ()) == 27


def test_storage_matches_tt_param_count(rng):
    shape = (4, 4, 4)
    x = rng.standard_normal(64)
    tt = tt_svd(x, CompressSpec(shape=shape, max_ranks=(2, 2), epsilon=0.0))
    assert storage_for(shape, tt.ranks[1:-1]) == param_count(tt)


def test_optimal_shapes_27():
    assert optimal_shapes(27, 1) == {(3, 3, 3)}


def test_optimal_shapes_16_ties():
    best = optimal_shapes(16, 1)
    assert best == {(2, 2, 2, 2), (2, 2, 4), (2, 4, 2), (4, 2, 2), (4, 4)}
    assert storage_for((2, 2, 2, 2), (1, 1, 1)) == 8


def test_optimal_shapes_4_both_tie():
    assert optimal_shapes(4, 1) == {(2, 2), (4,)}


@pytest.mark.parametrize("d", [8, 16, 27, 64, 128, 729])
def test_prime_shape_in_argmin_at_unit_rank(d):
    assert tuple(prime_factors(d)) in optimal_shapes(d, 1)


def test_uniform_storage_closed_form_agrees_with_sum():
    for d, mode, order in ((16, 2, 4), (27, 3, 3), (64, 4, 3), (64, 2, 6)):
        for r in (1, 2, 3):
            shape = (mode,) * order
            assert math.prod(shape) == d
            assert storage_for(shape, (r,) * (order - 1)) == uniform_storage(mode, order, r)


def test_optimal_uniform_shapes_match_closed_form():
    # Over uniform shapes only, exhaustive storage and the closed form rank
    # the candidates identically.
    d = 64
    uniform = [(2, 6), (4, 3), (8, 2), (64, 1)]
    by_sum = {
        (i,) * n: storage_for((i,) * n, clipped_uniform_ranks((i,) * n, 1)) for i, n in uniform
    }
    by_form = {(i,) * n: uniform_storage(i, n, 1) for i, n in uniform}
    assert by_sum == by_form


def test_plan_max_compression_768():
    assert plan(768, "max").shape == (2, 2, 2, 2, 2, 2, 2, 2, 3)


def test_plan_target_order_768():
    assert plan(768, "order", order=3).shape == (8, 8, 12)


def test_plan_trivial_dimension():
    p = plan(1, "max")
    assert p.shape == (1,)
    assert p.predicted_params == 1


def test_plan_explicit_validates():
    p = plan(24, "explicit", shape=(2, 3, 4))
    assert p.shape == (2, 3, 4)
    with pytest.raises(ShapeMismatch):
        plan(24, "explicit", shape=(2, 3, 5))


def test_plan_infeasible_order():
    with pytest.raises(InfeasibleOrder):
        plan(8, "order", order=4)


def test_plan_predicted_storage_cube():
    p = plan(27, "max")
    assert p.predicted_params == 9
    assert p.predicted_eta == 2.0


def test_plan_caps_clip_to_structural():
    p = plan(27, "max", rank_cap=100)
    assert p.rank_caps == structural_max_ranks((3, 3, 3))


def test_balanced_tie_break_deterministic():
    first = plan(36, "order", order=2).shape
    assert first == (6, 6)
    assert plan(36, "order", order=2).shape == first


def test_prime_factors():
    assert prime_factors(768) == [2] * 8 + [3]
    assert prime_factors(1) == []
    assert prime_factors(97) == [97]
