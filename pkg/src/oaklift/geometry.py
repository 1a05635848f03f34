"""Exact rational planar primitives.

Everything here works on :class:`fractions.Fraction` coordinates; there is no
floating point anywhere in the predicates.  Triangle "wedges" stand in for
the open neighborhoods of sprigs: the open region of a triangle wedge is the
interior of the triangle, and the special ``plane`` wedge is all of R^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import NamedTuple, Optional, Sequence

Rat = Fraction


class NotDisjoint(ValueError):
    pass


def rat(value) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("binary floats are not accepted as exact rationals")
    return Fraction(value)


def rat_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


class RatPoint2(NamedTuple):
    x: Fraction
    y: Fraction

    @classmethod
    def of(cls, x, y) -> "RatPoint2":
        return cls(rat(x), rat(y))

    def __add__(self, other):  # type: ignore[override]
        return RatPoint2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return RatPoint2(self.x - other[0], self.y - other[1])

    def scale(self, k) -> "RatPoint2":
        return RatPoint2(self.x * k, self.y * k)

    def to_json(self):
        return [rat_str(self.x), rat_str(self.y)]

    @classmethod
    def from_json(cls, data) -> "RatPoint2":
        return cls(rat(data[0]), rat(data[1]))


P = RatPoint2


class Segment(NamedTuple):
    a: RatPoint2
    b: RatPoint2

    def to_json(self):
        return [self.a.to_json(), self.b.to_json()]

    @classmethod
    def from_json(cls, data) -> "Segment":
        return cls(RatPoint2.from_json(data[0]), RatPoint2.from_json(data[1]))

    def length_max(self) -> Fraction:
        """Length in the max-norm (the Euclidean length for axis-parallel segments)."""
        return max(abs(self.b.x - self.a.x), abs(self.b.y - self.a.y))

    @property
    def axis(self) -> Optional[int]:
        """0 if horizontal, 1 if vertical, None otherwise."""
        if self.a.y == self.b.y and self.a.x != self.b.x:
            return 0
        if self.a.x == self.b.x and self.a.y != self.b.y:
            return 1
        return None


TRIANGLE = "triangle"
PLANE = "plane"


@dataclass(frozen=True)
class Wedge:
    apex: Optional[RatPoint2]
    left: Optional[RatPoint2]
    right: Optional[RatPoint2]
    kind: str = TRIANGLE

    @classmethod
    def plane(cls) -> "Wedge":
        return cls(None, None, None, PLANE)

    @classmethod
    def triangle(cls, apex, left, right) -> "Wedge":
        w = cls(P.of(*apex), P.of(*left), P.of(*right), TRIANGLE)
        if orient(w.apex, w.left, w.right) == 0:
            raise ValueError("degenerate wedge: vertices are collinear")
        return w

    @property
    def is_plane(self) -> bool:
        return self.kind == PLANE

    @property
    def vertices(self) -> tuple:
        return (self.apex, self.left, self.right)

    def bbox(self) -> Optional["RatBox"]:
        if self.is_plane:
            return None
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return RatBox(((min(xs), max(xs)), (min(ys), max(ys))))

    def to_json(self):
        if self.is_plane:
            return {"kind": PLANE}
        return {
            "apex": self.apex.to_json(),
            "left": self.left.to_json(),
            "right": self.right.to_json(),
            "kind": TRIANGLE,
        }

    @classmethod
    def from_json(cls, data) -> "Wedge":
        if data["kind"] == PLANE:
            return cls.plane()
        return cls.triangle(
            RatPoint2.from_json(data["apex"]),
            RatPoint2.from_json(data["left"]),
            RatPoint2.from_json(data["right"]),
        )


@dataclass(frozen=True)
class RatBox:
    """Axis-aligned box given by closed rational intervals, one per dimension."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((rat(lo), rat(hi)) for lo, hi in self.intervals)
        for lo, hi in ivs:
            if lo > hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def point(cls, coords) -> "RatBox":
        return cls(tuple((c, c) for c in coords))

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def __getitem__(self, i):
        return self.intervals[i]

    def __iter__(self):
        return iter(self.intervals)

    def widths(self):
        return [hi - lo for lo, hi in self.intervals]

    def width(self) -> Fraction:
        return max(self.widths(), default=Fraction(0))

    def contains(self, coords) -> bool:
        return all(lo <= c <= hi for (lo, hi), c in zip(self.intervals, coords))

    def contains_open(self, coords) -> bool:
        return all(lo < c < hi for (lo, hi), c in zip(self.intervals, coords))

    def subset_of(self, other: "RatBox") -> bool:
        return all(
            olo <= lo and hi <= ohi
            for (lo, hi), (olo, ohi) in zip(self.intervals, other.intervals)
        )

    def intersect(self, other: "RatBox") -> Optional["RatBox"]:
        out = []
        for (lo, hi), (olo, ohi) in zip(self.intervals, other.intervals):
            a, b = max(lo, olo), min(hi, ohi)
            if a > b:
                return None
            out.append((a, b))
        return RatBox(tuple(out))

    def disjoint(self, other: "RatBox") -> bool:
        return self.intersect(other) is None

    def hull(self, other: "RatBox") -> "RatBox":
        return RatBox(
            tuple(
                (min(lo, olo), max(hi, ohi))
                for (lo, hi), (olo, ohi) in zip(self.intervals, other.intervals)
            )
        )

    def inflate(self, r) -> "RatBox":
        return RatBox(tuple((lo - r, hi + r) for lo, hi in self.intervals))

    def bisect(self):
        """Split along the widest dimension (lowest index on ties)."""
        widths = self.widths()
        k = widths.index(max(widths))
        lo, hi = self.intervals[k]
        mid = (lo + hi) / 2
        left = list(self.intervals)
        right = list(self.intervals)
        left[k] = (lo, mid)
        right[k] = (mid, hi)
        return RatBox(tuple(left)), RatBox(tuple(right))

    def to_json(self):
        return [[rat_str(lo), rat_str(hi)] for lo, hi in self.intervals]

    @classmethod
    def from_json(cls, data) -> "RatBox":
        return cls(tuple((rat(lo), rat(hi)) for lo, hi in data))


# -- basic predicates ---------------------------------------------------------


def orient(a, b, c) -> Fraction:
    """Twice the signed area of abc; > 0 for a counter-clockwise turn."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def sign(q) -> int:
    return (q > 0) - (q < 0)


def _ccw(vertices):
    a, b, c = vertices
    return (a, b, c) if orient(a, b, c) > 0 else (a, c, b)


def point_in_open_triangle(p, vertices) -> bool:
    a, b, c = _ccw(vertices)
    return orient(a, b, p) > 0 and orient(b, c, p) > 0 and orient(c, a, p) > 0


def point_in_closed_triangle(p, vertices) -> bool:
    a, b, c = _ccw(vertices)
    return orient(a, b, p) >= 0 and orient(b, c, p) >= 0 and orient(c, a, p) >= 0


def point_on_segment(p, s: Segment) -> bool:
    a, b = s
    if orient(a, b, p) != 0:
        return False
    return (
        min(a.x, b.x) <= p[0] <= max(a.x, b.x)
        and min(a.y, b.y) <= p[1] <= max(a.y, b.y)
    )


def wedge_contains_point(w: Wedge, p) -> bool:
    if w.is_plane:
        return True
    return point_in_open_triangle(p, w.vertices)


def wedge_closure_contains_point(w: Wedge, p) -> bool:
    if w.is_plane:
        return True
    return point_in_closed_triangle(p, w.vertices)


def _edges(vertices):
    n = len(vertices)
    return [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]


def _project(vertices, axis):
    dots = [v[0] * axis[0] + v[1] * axis[1] for v in vertices]
    return min(dots), max(dots)


def closed_polygons_disjoint(poly1: Sequence, poly2: Sequence) -> bool:
    """Separating-axis test for two closed convex polygons, exact.

    Closed sets are disjoint iff some edge normal gives projections with a
    strict gap between them.
    """
    for poly in (poly1, poly2):
        for a, b in _edges(poly):
            axis = (a[1] - b[1], b[0] - a[0])
            lo1, hi1 = _project(poly1, axis)
            lo2, hi2 = _project(poly2, axis)
            if hi1 < lo2 or hi2 < lo1:
                return True
    return False


def closed_wedges_disjoint(w1: Wedge, w2: Wedge) -> bool:
    if w1.is_plane or w2.is_plane:
        return False
    return closed_polygons_disjoint(w1.vertices, w2.vertices)


def closed_wedge_inside_open_wedge(inner: Wedge, outer: Wedge) -> bool:
    if outer.is_plane:
        return True
    if inner.is_plane:
        return False
    # Both convex: the closed hull lies in the open triangle iff every vertex does.
    return all(point_in_open_triangle(v, outer.vertices) for v in inner.vertices)


def clip_segment_to_triangle(s: Segment, vertices):
    """Parameter range [t0, t1] of s(t) = a + t(b - a) inside the closed triangle, or None."""
    a, b = s
    d = (b.x - a.x, b.y - a.y)
    t0, t1 = Fraction(0), Fraction(1)
    for u, v in _edges(_ccw(vertices)):
        # inside half-plane: orient(u, v, p) >= 0, affine in t
        f0 = orient(u, v, a)
        df = (v[0] - u[0]) * d[1] - (v[1] - u[1]) * d[0]
        if df == 0:
            if f0 < 0:
                return None
            continue
        t = -f0 / df
        if df > 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return t0, t1


def closed_wedge_meets_segment_only_at(w: Wedge, s: Segment, q) -> bool:
    if w.is_plane or w.apex != q:
        return False
    if not point_on_segment(q, s):
        return False
    span = clip_segment_to_triangle(s, w.vertices)
    if span is None:
        return False
    t0, t1 = span
    if t0 != t1:
        return False
    a, b = s
    hit = (a.x + t0 * (b.x - a.x), a.y + t0 * (b.y - a.y))
    return hit == (q[0], q[1])


# -- distances ------------------------------------------------------------------


def point_segment_dist2(p, a, b) -> Fraction:
    dx, dy = b[0] - a[0], b[1] - a[1]
    px, py = p[0] - a[0], p[1] - a[1]
    den = dx * dx + dy * dy
    t = Fraction(px * dx + py * dy) / den if den else Fraction(0)
    t = min(max(t, Fraction(0)), Fraction(1))
    ex, ey = px - t * dx, py - t * dy
    return ex * ex + ey * ey


def sqrt_lower(d2: Fraction, bits: int = 24) -> Fraction:
    """A rational r with 0 <= r <= sqrt(d2), relative undershoot below 2**-bits."""
    if d2 < 0:
        raise ValueError("negative square")
    if d2 == 0:
        return Fraction(0)
    # scale by 4**k so the integer square root carries enough bits
    k = max(0, bits + 1 - (d2.numerator.bit_length() - d2.denominator.bit_length()) // 2)
    scaled = (d2.numerator << (2 * k)) // d2.denominator
    return Fraction(isqrt(scaled), 1 << k)


def closed_polygons_dist2(poly1, poly2) -> Fraction:
    """Exact squared distance between disjoint closed convex polygons."""
    best = None
    for src, dst in ((poly1, poly2), (poly2, poly1)):
        for v in src:
            for a, b in _edges(dst):
                d2 = point_segment_dist2(v, a, b)
                if best is None or d2 < best:
                    best = d2
    return best


def distance_lower_bound(w1: Wedge, w2: Wedge) -> Fraction:
    if not closed_wedges_disjoint(w1, w2):
        raise NotDisjoint("closed wedges intersect")
    d = sqrt_lower(closed_polygons_dist2(w1.vertices, w2.vertices))
    assert d > 0
    return d
