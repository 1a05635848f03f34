from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from oaklift.collision import (
    PiecewiseLinear1D,
    TailBoundedFunc,
    cylinder_range,
    dyadic_candidates,
    find_collision,
)

CLAMP_SUM = TailBoundedFunc.clamp_sum()
prefixes = st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=16), max_size=5)


def test_cylinder_range_examples():
    assert cylinder_range(CLAMP_SUM, ()) == (0, F(3, 2))
    assert cylinder_range(CLAMP_SUM, (1,)) == (1, F(3, 2))
    single = TailBoundedFunc.single_clamp()
    assert cylinder_range(single, (F(1, 4),)) == (F(1, 4), F(1, 4))


def test_piecewise_component():
    g = PiecewiseLinear1D(((0, 0), (1, 1), (2, 0)))
    assert g(F(1, 2)) == F(1, 2) and g(F(3, 2)) == F(1, 2) and g(5) == 0
    assert g.range == (0, 1)
    with pytest.raises(ValueError):
        TailBoundedFunc(((1, PiecewiseLinear1D(((0, 0), (1, 2)))),))


@given(prefixes, st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=16), max_size=4))
def test_cylinder_range_holds_completions(prefix, extension):
    lo, hi = cylinder_range(CLAMP_SUM, prefix)
    v = CLAMP_SUM.evaluate_truncated(tuple(prefix) + tuple(extension))
    assert lo <= v <= hi
    assert hi - lo <= 2 * CLAMP_SUM.tail_bound(len(prefix))


def test_candidate_order_is_fixed():
    from itertools import islice

    assert list(islice(dyadic_candidates(), 5)) == [0, 1, -1, F(1, 2), F(-1, 2)]


def test_clamp_sum_collision():
    tr = find_collision(CLAMP_SUM, F(1, 10 ** 6))
    assert tr.a_prefix != tr.b_prefix
    assert len(tr.a_prefix) <= 40
    assert abs(CLAMP_SUM.evaluate_truncated(tr.a_prefix) - CLAMP_SUM.evaluate_truncated(tr.b_prefix)) < F(1, 10 ** 6)
    for L in tr.intervals:
        assert L[0] < L[1]


def test_single_clamp_collision_is_exact():
    F0 = TailBoundedFunc.single_clamp()
    tr = find_collision(F0, F(1, 10 ** 6))
    assert tr.singleton and tr.a_prefix != tr.b_prefix
    assert F0.evaluate_truncated(tr.a_prefix) == F0.evaluate_truncated(tr.b_prefix)


def test_smaller_delta_keeps_first_difference():
    t1 = find_collision(CLAMP_SUM, F(1, 10 ** 6))
    t2 = find_collision(CLAMP_SUM, F(1, 10 ** 7))
    first = lambda t: next(k for k, (x, y) in enumerate(zip(t.a_prefix, t.b_prefix)) if x != y)
    assert len(t2.a_prefix) >= len(t1.a_prefix)
    assert first(t1) == first(t2)


def test_strictly_monotone_terms():
    G = TailBoundedFunc((), 1, F(1, 3), PiecewiseLinear1D(((-1, -1), (1, 1))))
    tr = find_collision(G, F(1, 10 ** 6))
    assert tr.a_prefix != tr.b_prefix
    assert 0 < tr.difference < F(1, 10 ** 6)
    assert tr.difference < F(1, 10 ** 6) + 2 * tr.tail_bound


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([F(1, 2), F(1, 3), F(2, 5)]), st.sampled_from([F(1, 100), F(1, 1000)]))
def test_collisions_for_geometric_sums(ratio, delta):
    G = TailBoundedFunc.clamp_sum(ratio)
    tr = find_collision(G, delta)
    assert tr.a_prefix != tr.b_prefix
    assert abs(G.evaluate_truncated(tr.a_prefix) - G.evaluate_truncated(tr.b_prefix)) < delta


def test_json_round_trip():
    assert TailBoundedFunc.from_json(CLAMP_SUM.to_json()) == CLAMP_SUM
    assert TailBoundedFunc.from_json(TailBoundedFunc.single_clamp().to_json()) == TailBoundedFunc.single_clamp()
