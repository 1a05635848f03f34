from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from oaklift.geometry import (
    NotDisjoint,
    P,
    RatBox,
    Segment,
    Wedge,
    closed_polygons_dist2,
    closed_wedge_inside_open_wedge,
    closed_wedge_meets_segment_only_at,
    closed_wedges_disjoint,
    distance_lower_bound,
    point_in_closed_triangle,
    rat,
    sqrt_lower,
    wedge_contains_point,
)

rats = st.fractions(min_value=-4, max_value=4, max_denominator=64)

RIGHT = Wedge.triangle((0, 0), (1, 1), (1, -1))
FAR = Wedge.triangle((3, 0), (4, 1), (4, -1))


def test_rat_rejects_floats():
    with pytest.raises(TypeError):
        rat(0.5)
    assert rat("3/4") == F(3, 4)


def test_plane_contains_everything():
    assert wedge_contains_point(Wedge.plane(), (5, -7))


def test_open_triangle_membership():
    w = Wedge.triangle((0, 0), (-1, 1), (1, 1))
    assert wedge_contains_point(w, (0, F(1, 2)))
    assert not wedge_contains_point(w, (0, 0))
    assert not wedge_contains_point(w, (0, 1))


def test_degenerate_triangle_rejected():
    with pytest.raises(ValueError):
        Wedge.triangle((0, 0), (1, 1), (2, 2))


def test_disjoint_triangles():
    assert closed_wedges_disjoint(RIGHT, FAR)
    assert not closed_wedges_disjoint(RIGHT, RIGHT)
    touching = Wedge.triangle((1, 1), (2, 2), (2, 0))
    assert not closed_wedges_disjoint(RIGHT, touching)


def test_inside_open_wedge():
    inner = Wedge.triangle((0, 0), (F(1, 4), F(1, 2)), (F(-1, 4), F(1, 2)))
    outer = Wedge.triangle((0, -1), (2, 2), (-2, 2))
    assert closed_wedge_inside_open_wedge(inner, outer)
    assert closed_wedge_inside_open_wedge(inner, Wedge.plane())
    on_edge = Wedge.triangle((0, 2), (F(1, 4), F(1, 2)), (F(-1, 4), F(1, 2)))
    assert not closed_wedge_inside_open_wedge(on_edge, outer)


def test_meets_segment_only_at():
    stem = Segment(P.of(0, 0), P.of(1, 0))
    up = Wedge.triangle((F(1, 2), 0), (F(3, 8), F(1, 4)), (F(5, 8), F(1, 4)))
    assert closed_wedge_meets_segment_only_at(up, stem, P.of(F(1, 2), 0))
    crossing = Wedge.triangle((F(1, 2), F(1, 4)), (F(3, 8), F(-1, 4)), (F(5, 8), F(-1, 4)))
    assert not closed_wedge_meets_segment_only_at(crossing, stem, P.of(F(1, 2), 0))
    lifted = Wedge.triangle((F(1, 2), F(1, 8)), (F(3, 8), F(1, 4)), (F(5, 8), F(1, 4)))
    assert not closed_wedge_meets_segment_only_at(lifted, stem, P.of(F(1, 2), 0))


def test_distance_lower_bound_examples():
    d = distance_lower_bound(RIGHT, FAR)
    assert 1 <= d <= 2
    unit = Wedge.triangle((2, 0), (3, 1), (3, -1))
    d1 = distance_lower_bound(RIGHT, unit)
    assert 0 < d1 <= 1
    with pytest.raises(NotDisjoint):
        distance_lower_bound(RIGHT, RIGHT)


@given(st.fractions(min_value=0, max_value=100, max_denominator=1000))
def test_sqrt_lower_undershoots(d2):
    r = sqrt_lower(d2)
    assert r >= 0 and r * r <= d2


@given(rats, rats, rats, rats)
def test_box_intersect_is_common_part(a, b, c, d):
    b1 = RatBox(((min(a, b), max(a, b)),))
    b2 = RatBox(((min(c, d), max(c, d)),))
    meet = b1.intersect(b2)
    if meet is None:
        assert b1.disjoint(b2)
    else:
        assert meet.subset_of(b1) and meet.subset_of(b2)


@given(st.lists(st.tuples(rats, rats), min_size=6, max_size=6))
def test_separating_axis_agrees_with_point_sampling(pts):
    try:
        w1 = Wedge.triangle(*pts[:3])
        w2 = Wedge.triangle(*pts[3:])
    except ValueError:
        return
    if closed_wedges_disjoint(w1, w2):
        # no vertex of one lies in the other, and the distance is positive
        assert not any(point_in_closed_triangle(v, w2.vertices) for v in w1.vertices)
        assert not any(point_in_closed_triangle(v, w1.vertices) for v in w2.vertices)
        assert closed_polygons_dist2(w1.vertices, w2.vertices) > 0
    else:
        with pytest.raises(NotDisjoint):
            distance_lower_bound(w1, w2)
