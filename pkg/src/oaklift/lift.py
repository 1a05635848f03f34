"""One pass of the oak evolution: grow the oak and bend the map point by point.

Given an oak ``T``, a lifting ``f`` (every enumerated point of Q lands on the
crown), an open cover of Q and a budget ``eps``, :func:`evolve` processes the
points of Q in order.  A point whose value sits on an original leaf gets its
own new sprig hanging off a short piece ``H`` of that leaf's stem, and a bump
supported inside its cover element pushes it up the new stem.  Every choice is
deterministic, so two runs give identical oaks and DAGs.

All stems are axis-parallel: new stems are perpendicular to their parent.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import bend
from . import funcexpr as fx
from .geometry import P, RatBox, RatPoint2, Segment, Wedge, point_on_segment, rat, rat_str
from .oak import Oak, Sprig, WouldViolateOak

ZERO = Fraction(0)


class NotInCrown(ValueError):
    pass


class NotALifting(ValueError):
    def __init__(self, point, value):
        super().__init__(f"f({_fmt(point)}) = {_fmt(value)} is not on the crown")
        self.point = point
        self.value = value


class PlacementFailed(RuntimeError):
    pass


class ShrinkFailed(RuntimeError):
    pass


def _fmt(seq):
    return "(" + ", ".join(str(c) for c in seq) + ")"


# -- spaces and covers -----------------------------------------------------------


@dataclass(frozen=True)
class Space1D:
    """Finite union of disjoint closed intervals; ``None`` marks an infinite end."""

    pieces: tuple

    @classmethod
    def parse(cls, text: str) -> "Space1D":
        text = text.strip().replace(" ", "")
        if text in ("R", "(-inf,inf)"):
            return cls(((None, None),))
        pieces = []
        for part in re.split(r"[uU]", text):
            m = re.fullmatch(r"\[([^,\]]+),([^,\]]+)\]", part)
            if not m:
                raise ValueError(f"cannot parse interval {part!r}")
            lo, hi = rat(m.group(1)), rat(m.group(2))
            if lo > hi:
                raise ValueError(f"empty interval {part!r}")
            pieces.append((lo, hi))
        pieces.sort()
        for (_, h1), (l2, _) in zip(pieces, pieces[1:]):
            if h1 >= l2:
                raise ValueError("intervals must be disjoint")
        return cls(tuple(pieces))

    def contains(self, x) -> bool:
        return any((lo is None or lo <= x) and (hi is None or x <= hi) for lo, hi in self.pieces)

    def translate(self, shift) -> "Space1D":
        return Space1D(tuple((None if lo is None else lo + shift, None if hi is None else hi + shift) for lo, hi in self.pieces))

    def hull(self, q: Sequence = ()) -> tuple:
        """A finite interval holding every bounded piece; infinite ends fall back to Q +- 1."""
        los = [lo for lo, _ in self.pieces if lo is not None]
        his = [hi for _, hi in self.pieces if hi is not None]
        unbounded = any(lo is None or hi is None for lo, hi in self.pieces)
        if unbounded or not los:
            los += [min(q) - 1] if q else [Fraction(-1)]
            his += [max(q) + 1] if q else [Fraction(1)]
        return min(los), max(his)

    def __str__(self):
        if self.pieces == ((None, None),):
            return "R"
        return "u".join(f"[{lo},{hi}]" for lo, hi in self.pieces)


@dataclass(frozen=True)
class CoverFamily:
    """Open boxes covering the enumerated points; ``centers`` names each box's center point."""

    elements: tuple
    centers: tuple = ()

    def element_for(self, point) -> int:
        point = tuple(point)
        for i, c in enumerate(self.centers):
            if tuple(c) == point:
                return i
        for i, b in enumerate(self.elements):
            if b.contains_open(point):
                return i
        raise ValueError(f"{_fmt(point)} is not covered")

    def some_element_contains_both(self, a, b) -> bool:
        return any(e.contains_open(a) and e.contains_open(b) for e in self.elements)

    def to_json(self):
        return {
            "elements": [e.to_json() for e in self.elements],
            "centers": [[rat_str(c) for c in pt] for pt in self.centers],
        }

    @classmethod
    def from_json(cls, d) -> "CoverFamily":
        return cls(
            tuple(RatBox.from_json(e) for e in d["elements"]),
            tuple(tuple(rat(c) for c in pt) for pt in d["centers"]),
        )


# -- stem pieces -------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    """A relatively open piece of an axis-parallel stem.

    Points have coordinate ``const`` across the stem and ``u`` along it with
    lo < u < hi; an end flagged closed is a stem end that belongs to the piece.
    """

    axis: int
    const: Fraction
    lo: Fraction
    hi: Fraction
    closed_lo: bool = False
    closed_hi: bool = False

    def point(self, u) -> RatPoint2:
        return P(u, self.const) if self.axis == 0 else P(self.const, u)

    @property
    def closure(self) -> Segment:
        return Segment(self.point(self.lo), self.point(self.hi))

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, p) -> bool:
        if p[1 - self.axis] != self.const:
            return False
        u = p[self.axis]
        return (self.lo < u or (self.closed_lo and u == self.lo)) and (u < self.hi or (self.closed_hi and u == self.hi))

    def in_closure(self, p) -> bool:
        return p[1 - self.axis] == self.const and self.lo <= p[self.axis] <= self.hi

    def contains_box(self, box: RatBox) -> bool:
        if box[1 - self.axis] != (self.const, self.const):
            return False
        lo, hi = box[self.axis]
        return self.contains(self.point(lo)) and self.contains(self.point(hi))

    def to_json(self):
        return {
            "axis": self.axis,
            "const": rat_str(self.const),
            "lo": rat_str(self.lo),
            "hi": rat_str(self.hi),
            "closed_lo": self.closed_lo,
            "closed_hi": self.closed_hi,
        }

    @classmethod
    def from_json(cls, d) -> "Piece":
        return cls(d["axis"], rat(d["const"]), rat(d["lo"]), rat(d["hi"]), d["closed_lo"], d["closed_hi"])


def _stem_axis(stem: Segment) -> int:
    axis = stem.axis
    if axis is None:
        raise ValueError("construction stems must be axis-parallel")
    return axis


# -- single-step choices -------------------------------------------------------------


def locate_leaf(o: Oak, v) -> int:
    cls = o.classify_point(v)
    if not cls.in_crown:
        raise NotInCrown(f"{_fmt(v)} is not on the crown ({cls.tag})")
    return cls.node


def locate_sprig(o: Oak, v) -> int:
    """The sprig whose stem carries v away from every knot (the step's t_n)."""
    cls = o.classify_point(v)
    if cls.tag in ("knot", "outside"):
        raise NotInCrown(f"{_fmt(v)} is a knot or off the oak ({cls.tag})")
    return cls.node


def choose_H(o: Oak, leaf: int, v, budget) -> Piece:
    """Piece of the leaf stem around v, shorter than ``budget``, whose closure misses every knot."""
    stem = o[leaf].stem
    axis = _stem_axis(stem)
    const = stem.a[1 - axis]
    s0, s1 = sorted((stem.a[axis], stem.b[axis]))
    u = v[axis]
    knots = [k[axis] for k in o.knots() if point_on_segment(k, stem)]
    d = min(abs(u - k) for k in knots)
    if d == 0:
        raise NotInCrown("value sits on a knot")
    h = min(rat(budget), d) / 4
    lo, hi = max(u - h, s0), min(u + h, s1)
    return Piece(axis, const, lo, hi, closed_lo=(lo == s0), closed_hi=(hi == s1))


def _dyadic_fractions(levels=40):
    for j in range(1, levels + 1):
        den = 1 << j
        for k in range(1, den, 2):
            yield Fraction(k, den)


def _maxdist(p, q) -> Fraction:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


def choose_sprig(o: Oak, leaf: int, H: Piece, forbidden: Sequence, budget, max_iter: int = 64):
    """Place a new son of ``leaf`` with base inside H.

    Returns ``(new_oak, index, sprig)``.  The base is the first dyadic point of
    H that is not a forbidden value; the stem is perpendicular to H and half
    the hood height; the hood is a narrow triangle (half-width a quarter of its
    height) no taller than an eighth of the distance to the nearest knot or
    forbidden value, halved until the result is still an oak.
    """
    bad = {(p[0], p[1]) for p in forbidden}
    q = None
    for t in _dyadic_fractions():
        cand = H.point(H.lo + t * H.length)
        if (cand.x, cand.y) not in bad:
            q = cand
            break
    if q is None:
        raise PlacementFailed("no admissible base point inside H")
    others = [p for p in forbidden if (p[0], p[1]) != (q.x, q.y)] + o.knots()
    height = rat(budget)
    if others:
        height = min(height, min(_maxdist(q, p) for p in others) / 8)
    if H.axis == 0:
        directions = [P(0, 1), P(0, -1)]
    else:
        directions = [P(1, 0), P(-1, 0)]
    last = None
    for _ in range(max_iter):
        for d in directions:
            n = P(-d.y, d.x)
            tip = q + d.scale(height / 2)
            top = q + d.scale(height)
            hood = Wedge.triangle(q, top - n.scale(height / 4), top + n.scale(height / 4))
            sprig = Sprig(q, Segment(q, tip), hood)
            try:
                new = o.add_sprig(leaf, sprig)
            except WouldViolateOak as err:
                last = err
                continue
            return new, len(new) - 1, sprig
        height /= 2
    raise PlacementFailed(f"no sprig fits after {max_iter} halvings: {last}")


def build_bump(f: fx.Expr, a: Sequence, H: Piece, W: RatBox, exclude: Sequence = (), max_halvings: int = 128):
    """Tent bump peaking at ``a`` whose support box B sits in W and in the preimage of H.

    B starts as W and is halved towards ``a`` until the enclosure of f over B
    lies in H and no excluded point is inside B.  Returns ``(bump, B)``.
    """
    a = tuple(rat(c) for c in a)
    if not W.contains_open(a):
        raise ValueError("bump centre must lie in the open cover element")
    if not H.contains(fx.eval_exact(f, a)):
        raise ValueError("f(a) is not on H")

    def shrunk(k):
        return RatBox(tuple((c - (c - lo) / 2 ** k, c + (hi - c) / 2 ** k) for (lo, hi), c in zip(W, a)))

    def fits(k):
        box = shrunk(k)
        return not any(box.contains_open(p) for p in exclude) and H.contains_box(fx.eval_interval(f, box))

    # enclosures only shrink on nested boxes, so gallop to a fitting k, then bisect for the least one
    hi = 0
    while not fits(hi):
        if hi >= max_halvings:
            raise ShrinkFailed(f"enclosure still leaves H after {max_halvings} halvings")
        hi = min(max_halvings, max(1, 2 * hi))
    lo = hi // 2 if hi > 1 else 0
    while lo < hi:
        mid = (lo + hi) // 2
        if fits(mid):
            hi = mid
        else:
            lo = mid + 1
    box = shrunk(hi)
    return fx.Bump(box, a), box


# -- the evolution -----------------------------------------------------------------


@dataclass
class StepRecord:
    index: int
    point: tuple
    value: RatPoint2
    leaf: int
    acted: bool
    budget: Fraction
    H: Optional[Piece] = None
    sprig_index: Optional[int] = None
    sprig: Optional[Sprig] = None
    bump_box: Optional[RatBox] = None
    cover_index: Optional[int] = None
    cover_box: Optional[RatBox] = None
    slopes: Optional[tuple] = None
    norm_bound: Optional[Fraction] = None

    def to_json(self):
        d = {
            "index": self.index,
            "point": [rat_str(c) for c in self.point],
            "value": self.value.to_json(),
            "leaf": self.leaf,
            "acted": self.acted,
            "budget": rat_str(self.budget),
        }
        if self.acted:
            d.update(
                H=self.H.to_json(),
                sprig_index=self.sprig_index,
                sprig=self.sprig.to_json(),
                bump_box=self.bump_box.to_json(),
                cover_index=self.cover_index,
                cover_box=self.cover_box.to_json(),
                slopes=[rat_str(s) for s in self.slopes],
                norm_bound=rat_str(self.norm_bound),
            )
        return d

    @classmethod
    def from_json(cls, d) -> "StepRecord":
        rec = cls(
            d["index"], tuple(rat(c) for c in d["point"]), RatPoint2.from_json(d["value"]),
            d["leaf"], d["acted"], rat(d["budget"]),
        )
        if rec.acted:
            rec.H = Piece.from_json(d["H"])
            rec.sprig_index = d["sprig_index"]
            rec.sprig = Sprig.from_json(d["sprig"])
            rec.bump_box = RatBox.from_json(d["bump_box"])
            rec.cover_index = d["cover_index"]
            rec.cover_box = RatBox.from_json(d["cover_box"])
            rec.slopes = tuple(rat(s) for s in d["slopes"])
            rec.norm_bound = rat(d["norm_bound"])
        return rec


@dataclass
class LiftResult:
    oak: Oak
    func: fx.Expr
    records: list
    funcs: list = field(default_factory=list)  # the map after each acting step, funcs[0] = input


def evolve(T: Oak, f: fx.Expr, Q: Sequence, W: CoverFamily, eps) -> LiftResult:
    """Grow ``T`` and bend ``f`` over the enumerated points ``Q``.

    The result is a splitting evolution of ``f`` on the grown oak, and each
    acting step moves the map by less than eps / 2**(n+1) in the max-norm.
    """
    eps = rat(eps)
    points = [tuple(rat(c) for c in a) for a in Q]
    values = [fx.eval_exact(f, a) for a in points]
    for a, v in zip(points, values):
        if not T.classify_point(v).in_crown:
            raise NotALifting(a, v)
    size_t = len(T)
    oak, cur = T, f
    records, funcs = [], [f]
    for n, a in enumerate(points):
        v = values[n]
        leaf = locate_sprig(oak, v)
        budget = eps / 2 ** (n + 2)
        if leaf >= size_t:
            records.append(StepRecord(n, a, v, leaf, False, budget))
            continue
        H = choose_H(oak, leaf, v, budget)
        oak, s_idx, sprig = choose_sprig(oak, leaf, H, values, budget)
        w_idx = W.element_for(a)
        bump, B = build_bump(cur, a, H, W.elements[w_idx], exclude=[p for p in points if p != a])
        q_u = sprig.base[H.axis]

        def normalize(u):
            return (u - q_u) / (q_u - H.lo) if u <= q_u else (u - q_u) / (H.hi - q_u)

        heights = [fx.eval_exact(bump, p) for p in points]
        avoid = [(normalize(val[H.axis]), h) for val, h in zip(values, heights) if H.in_closure(val)]
        choice = bend.choose_slopes(avoid)
        new = fx.BendApply(
            H.axis, H.const, H.lo, q_u, H.hi, sprig.tip, choice.slope_right, choice.slope_left,
            fx.Pair(cur, bump),
        )
        values = [new.apply(val, h) if h > 0 else val for val, h in zip(values, heights)]
        moved = values[n]
        if moved == sprig.base or not point_on_segment(moved, sprig.stem):
            raise AssertionError("bumped point did not climb the new stem")
        bound = fx.diff_bound_on_box(cur, new, B)
        records.append(
            StepRecord(
                n, a, v, leaf, True, budget, H, s_idx, sprig, B, w_idx, W.elements[w_idx],
                (choice.slope_right, choice.slope_left), bound,
            )
        )
        cur = new
        funcs.append(cur)
    return LiftResult(oak, cur, records, funcs)
