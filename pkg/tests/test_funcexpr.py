from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from oaklift import funcexpr as fx
from oaklift.geometry import RatBox

unit = st.fractions(min_value=0, max_value=1, max_denominator=128)


def tent():
    return fx.Bump(RatBox(((0, 1),)), (F(1, 2),))


def test_const_values():
    c = fx.Const((1, 0))
    assert fx.eval_exact(c, (F(1, 3), F(2, 3))) == (1, 0)
    assert fx.eval_interval(c, RatBox(((0, 1),))) == RatBox.point((1, 0))


def test_bump_peak_and_edge():
    assert fx.eval_exact(tent(), (F(1, 2),)) == 1
    assert fx.eval_exact(tent(), (0,)) == 0
    assert fx.eval_exact(tent(), (F(3, 2),)) == 0


def test_bump_enclosure():
    box = fx.eval_interval(tent(), RatBox(((F(1, 4), F(3, 4)),)))
    lo, hi = box[0]
    assert 0 <= lo and hi == 1


def test_clamp_triangle():
    e = fx.ClampTriangle(fx.Pair(fx.Coord(0), fx.Coord(1)))
    assert fx.eval_exact(e, (F(9, 10), F(1, 2))) == (F(1, 2), F(1, 2))
    box = fx.eval_interval(e, RatBox(((0, 1), (0, 1))))
    assert box.subset_of(RatBox(((0, 1), (0, 1))))


def test_missing_coordinate():
    with pytest.raises(fx.MissingCoordinate):
        fx.eval_exact(fx.Coord(2), (F(1),))


def test_sup_diff_bound_trivial_cases():
    dom = RatBox(((0, 1),))
    assert fx.sup_diff_bound(tent(), tent(), dom, 3) == 0
    assert fx.sup_diff_bound(fx.Const((1, 0)), fx.Const((0, 0)), dom, 3) == 1


def test_default_depth_from_environment(monkeypatch):
    monkeypatch.setenv("OAKLIFT_DEPTH", "7")
    assert fx.default_depth() == 7
    monkeypatch.delenv("OAKLIFT_DEPTH")
    assert fx.default_depth() == 4


def sample_bend():
    """A stem piece on [0,1]x{0} around q = 1/2 with a vertical new stem."""
    bump = fx.Bump(RatBox(((F(1, 4), F(3, 4)),)), (F(1, 2),))
    v = fx.Pair(fx.Affine1D(F(1, 2), F(1, 4), fx.Coord(0)), fx.Const(0))
    return fx.BendApply(0, 0, F(1, 4), F(1, 2), F(3, 4), (F(1, 2), F(1, 16)), F(1), F(1), fx.Pair(v, bump))


def test_bend_moves_peak_to_tip():
    e = sample_bend()
    assert fx.eval_exact(e, (F(1, 2),)) == (F(1, 2), F(1, 16))
    # outside the bump support nothing moves
    assert fx.eval_exact(e, (0,)) == (F(1, 4), 0)
    assert fx.eval_exact(e, (1,)) == (F(3, 4), 0)


@given(unit)
def test_interval_enclosure_contains_exact_values(x):
    e = sample_bend()
    v = fx.eval_exact(e, (x,))
    box = fx.eval_interval(e, RatBox(((max(x - F(1, 64), 0), min(x + F(1, 64), 1)),)))
    assert box.contains(v)


@given(unit)
def test_sup_diff_bound_dominates_pointwise_gap(x):
    e = sample_bend()
    inner = e.args[0].args[0]
    bound = fx.sup_diff_bound(inner, e, RatBox(((0, 1),)), 4)
    a, b = fx.eval_exact(inner, (x,)), fx.eval_exact(e, (x,))
    assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) <= bound


def test_dag_round_trip_shares_nodes():
    e = sample_bend()
    data = fx.dag_to_json({"f": e, "g": e.args[0]})
    again = fx.dag_from_json(data)
    assert again["f"].args[0] is again["g"]
    for x in (0, F(1, 3), F(1, 2), F(5, 8), 1):
        assert fx.eval_exact(again["f"], (x,)) == fx.eval_exact(e, (x,))
    assert fx.dag_to_json({"f": again["f"], "g": again["g"]}) == data
