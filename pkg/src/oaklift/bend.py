"""The square-to-cross bend map.

``phi`` sends the box [-1,1] x [0,1] onto the set
``{(x, y) : x = 0 or y = 0}`` inside it.  The bottom edge is fixed, the top
edge collapses to (0, 1), and a given finite avoid-set never lands on the
origin.  Each half is a horizontal clamp onto a triangle followed by a
projection along a ray whose slope is chosen to miss the avoid-set.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .geometry import P, RatPoint2, rat

ZERO = Fraction(0)
ONE = Fraction(1)


class OutOfDomain(ValueError):
    pass


class OriginInAvoidSet(ValueError):
    pass


def positive_rationals() -> Iterator[Fraction]:
    """1, 1/2, 2, 1/3, 3/2, 2/3, 3, 1/4, ... (breadth-first over the binary tree of positive rationals)."""
    q = ONE
    while True:
        yield q
        q = 1 / (2 * (q.numerator // q.denominator) - q + 1)


def choose_avoiding_slope(bad: Iterable) -> Fraction:
    bad = {rat(b) for b in bad}
    for q in positive_rationals():
        if q not in bad:
            return q
    raise AssertionError("unreachable")


def clamp_right(p) -> RatPoint2:
    """Nearest point to p on its horizontal line inside {0 <= x <= 1 - y}."""
    x, y = rat(p[0]), rat(p[1])
    if not (0 <= x <= 1 and 0 <= y <= 1):
        raise OutOfDomain(f"{p} is not in [0,1]x[0,1]")
    return P(min(x, 1 - y), y)


def ray_project_right(p, p_r) -> RatPoint2:
    """Project p along -p_r onto the bottom edge, or onto the axis x=0 if it gets there first."""
    x, y = rat(p[0]), rat(p[1])
    xr, yr = rat(p_r[0]), rat(p_r[1])
    if xr <= 0 or yr <= 0:
        raise OutOfDomain("ray direction must have positive coordinates")
    if not (x >= 0 and y >= 0 and x <= 1 - y):
        raise OutOfDomain(f"{p} is not in the right triangle")
    return P(*_ray(x, y, yr / xr))


def _ray(x, y, slope):
    xb = x - y / slope
    if xb >= 0:
        return xb, ZERO
    return ZERO, y - x * slope


def ray_exact(x, y, slope_right, slope_left) -> tuple:
    if x >= 0:
        return _ray(x, y, slope_right)
    bx, by = _ray(-x, y, slope_left)
    return -bx, by


def phi_exact(x, y, slope_right, slope_left) -> tuple:
    """The bend map on the full box; the left half mirrors the right one."""
    c = min(abs(x), 1 - y)
    return ray_exact(c if x >= 0 else -c, y, slope_right, slope_left)


def bad_slope(p) -> Optional[Fraction]:
    """Slope of the one ray that would send the clamped image of p to the origin."""
    x, y = rat(p[0]), rat(p[1])
    cx, cy = min(abs(x), 1 - y), y
    if cx == 0 or cy == 0:
        return None
    return cy / cx


@dataclass(frozen=True)
class SlopeChoice:
    avoid_right: tuple
    avoid_left: tuple
    slope_right: Fraction
    slope_left: Fraction

    @property
    def p_right(self) -> RatPoint2:
        return P(ONE, self.slope_right)

    @property
    def p_left(self) -> RatPoint2:
        return P(-ONE, self.slope_left)


def choose_slopes(avoid: Iterable) -> SlopeChoice:
    right, left = [], []
    for a in avoid:
        a = P(rat(a[0]), rat(a[1]))
        if a == (0, 0):
            raise OriginInAvoidSet("(0,0) cannot be avoided")
        if not (-1 <= a.x <= 1 and 0 <= a.y <= 1):
            raise OutOfDomain(f"avoid point {a} is outside the box")
        (right if a.x >= 0 else left).append(a)
    s_r = choose_avoiding_slope(s for s in map(bad_slope, right) if s is not None)
    s_l = choose_avoiding_slope(s for s in map(bad_slope, left) if s is not None)
    return SlopeChoice(tuple(right), tuple(left), s_r, s_l)


# -- interval versions ------------------------------------------------------------


def _clamp_iv(x, y):
    (xlo, xhi), (ylo, yhi) = x, y
    return (min(xlo, 1 - yhi), min(xhi, 1 - ylo)), y


def _ray_parts_iv(x, y, slope):
    """Enclosures of the bottom-edge part and the axis part of the ray projection."""
    (xlo, xhi), (ylo, yhi) = x, y
    xb = (xlo - yhi / slope, xhi - ylo / slope)
    bottom = top = None
    if xb[1] >= 0:
        bottom = (max(xb[0], ZERO), xb[1])
    if xb[0] < 0:
        top = (max(ylo - xhi * slope, ZERO), max(yhi - xlo * slope, ZERO))
    return bottom, top


def ray_parts_interval(x, y, slope_right, slope_left):
    """Branch-split enclosure of the ray projection alone (see phi_parts_interval)."""
    return _parts(x, y, slope_right, slope_left, clamp=False)


def phi_parts_interval(x, y, slope_right, slope_left):
    """Sound enclosure of phi over the box x times y, split by branch.

    Returns ``(bottom, top)``: ``bottom`` encloses the first coordinate of
    the images on the bottom edge and ``top`` the second coordinate of the
    images on the axis x = 0; either may be None when that branch is
    unreachable from the box.
    """
    return _parts(x, y, slope_right, slope_left, clamp=True)


def _parts(x, y, slope_right, slope_left, clamp):
    prep = _clamp_iv if clamp else (lambda a, b: (a, b))
    bottoms, tops = [], []
    xlo, xhi = x
    if xhi >= 0:
        part = (max(xlo, ZERO), xhi)
        b, t = _ray_parts_iv(*prep(part, y), slope_right)
        if b is not None:
            bottoms.append(b)
        if t is not None:
            tops.append(t)
    if xlo < 0:
        part = (max(-xhi, ZERO), -xlo)
        b, t = _ray_parts_iv(*prep(part, y), slope_left)
        if b is not None:
            bottoms.append((-b[1], -b[0]))
        if t is not None:
            tops.append(t)
    return _hull(bottoms), _hull(tops)


def _hull(ivs):
    if not ivs:
        return None
    return min(lo for lo, _ in ivs), max(hi for _, hi in ivs)


def build_phi(avoid: Iterable = ()):
    """Expression for phi whose ray slopes miss every point of ``avoid``.

    The conditions phi(x,0)=(x,0), phi(x,1)=(0,1) and phi(a)!=(0,0) are
    re-checked exactly on the avoid-set before returning.
    """
    from . import funcexpr as fx

    choice = choose_slopes(avoid)
    e = fx.RayProject(choice.p_right, choice.p_left, fx.ClampTriangle(fx.Pair(fx.Coord(0), fx.Coord(1))))
    for a in choice.avoid_right + choice.avoid_left:
        if fx.eval_exact(e, a) == (0, 0):
            raise AssertionError(f"slope choice failed to avoid {a}")
    return e
