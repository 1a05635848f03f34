"""Collisions for real-valued maps on R^omega.

A continuous F : R^omega -> R cannot be injective on Q^omega.  For maps given
as weighted sums of clamped one-dimensional terms, the image of every
cylinder (sequences with a fixed finite prefix) is an interval we can compute
exactly.  Intersecting the images of two cylinders and extending both
prefixes so that the intersection stays a nondegenerate interval yields two
distinct rational sequences whose values agree to any tolerance.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .geometry import rat, rat_str

ZERO = Fraction(0)
ONE = Fraction(1)


class SearchStalled(RuntimeError):
    def __init__(self, step: int, message: str = ""):
        super().__init__(message or f"no candidate in budget at step {step}")
        self.step = step


@dataclass(frozen=True)
class PiecewiseLinear1D:
    """Linear interpolation through ``knots``, constant beyond the outer knots."""

    knots: tuple

    def __post_init__(self):
        ks = tuple((rat(x), rat(y)) for x, y in self.knots)
        if not ks:
            raise ValueError("need at least one knot")
        if any(a[0] >= b[0] for a, b in zip(ks, ks[1:])):
            raise ValueError("knot abscissae must increase")
        object.__setattr__(self, "knots", ks)

    @classmethod
    def clamp(cls, lo, hi) -> "PiecewiseLinear1D":
        return cls(((lo, lo), (hi, hi)))

    def __call__(self, x) -> Fraction:
        x = rat(x)
        ks = self.knots
        if x <= ks[0][0]:
            return ks[0][1]
        if x >= ks[-1][0]:
            return ks[-1][1]
        for (x0, y0), (x1, y1) in zip(ks, ks[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        raise AssertionError("unreachable")

    @property
    def range(self) -> tuple:
        ys = [y for _, y in self.knots]
        return min(ys), max(ys)

    def to_json(self):
        return {"knots": [[rat_str(x), rat_str(y)] for x, y in self.knots]}

    @classmethod
    def from_json(cls, d) -> "PiecewiseLinear1D":
        return cls(tuple((rat(x), rat(y)) for x, y in d["knots"]))


def _scaled(c, iv) -> tuple:
    lo, hi = c * iv[0], c * iv[1]
    return (lo, hi) if lo <= hi else (hi, lo)


@dataclass(frozen=True)
class TailBoundedFunc:
    """F(x) = sum_k c_k g_k(x_k).

    The first ``len(terms)`` summands are given explicitly as (c_k, g_k); every
    later index k uses ``tail_weight * tail_ratio**k`` with the shared
    component ``tail_component``.  Without a tail F depends on finitely many
    coordinates.
    """

    terms: tuple = ()
    tail_weight: Fraction = ZERO
    tail_ratio: Fraction = ZERO
    tail_component: Optional[PiecewiseLinear1D] = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((rat(c), g) for c, g in self.terms))
        object.__setattr__(self, "tail_weight", rat(self.tail_weight))
        object.__setattr__(self, "tail_ratio", rat(self.tail_ratio))
        if self.has_tail:
            if not 0 < self.tail_ratio < 1:
                raise ValueError("tail ratio must lie in (0, 1)")
            if self.tail_component is None:
                raise ValueError("a tail needs a component")
        for _, g in self.terms:
            lo, hi = g.range
            if lo < -1 or hi > 1:
                raise ValueError("component ranges must lie in [-1, 1]")

    @property
    def has_tail(self) -> bool:
        return self.tail_weight != 0

    @classmethod
    def clamp_sum(cls, ratio=Fraction(1, 3)) -> "TailBoundedFunc":
        """sum over k >= 0 of ratio**k * clamp(x_k, 0, 1)."""
        return cls((), ONE, rat(ratio), PiecewiseLinear1D.clamp(0, 1))

    @classmethod
    def single_clamp(cls) -> "TailBoundedFunc":
        """clamp(x_0, 0, 1)."""
        return cls(((ONE, PiecewiseLinear1D.clamp(0, 1)),))

    def weight(self, k: int) -> Fraction:
        if k < len(self.terms):
            return self.terms[k][0]
        return self.tail_weight * self.tail_ratio ** k if self.has_tail else ZERO

    def component(self, k: int) -> Optional[PiecewiseLinear1D]:
        if k < len(self.terms):
            return self.terms[k][1]
        return self.tail_component

    def _geometric_from(self, m: int) -> Fraction:
        """sum of tail_weight * tail_ratio**k over k >= max(m, len(terms))."""
        if not self.has_tail:
            return ZERO
        start = max(m, len(self.terms))
        return self.tail_weight * self.tail_ratio ** start / (1 - self.tail_ratio)

    def tail_bound(self, m: int) -> Fraction:
        """tau_m: sum of |c_k| over k >= m."""
        explicit = sum((abs(c) for c, _ in self.terms[m:]), ZERO)
        return explicit + abs(self._geometric_from(m))

    def partial_sum(self, prefix: Sequence) -> Fraction:
        total = ZERO
        for k, x in enumerate(prefix):
            g = self.component(k)
            if g is not None:
                total += self.weight(k) * g(x)
        return total

    def evaluate_truncated(self, prefix: Sequence, fill=ZERO) -> Fraction:
        """F at the prefix followed by the constant ``fill`` in every later coordinate."""
        n = len(prefix)
        total = self.partial_sum(prefix)
        for k in range(n, len(self.terms)):
            total += self.terms[k][0] * self.terms[k][1](fill)
        if self.has_tail:
            total += self._geometric_from(n) * self.tail_component(fill)
        return total

    def to_json(self):
        d = {"terms": [{"weight": rat_str(c), **g.to_json()} for c, g in self.terms]}
        if self.has_tail:
            d["tail"] = {
                "weight": rat_str(self.tail_weight),
                "ratio": rat_str(self.tail_ratio),
                **self.tail_component.to_json(),
            }
        return d

    @classmethod
    def from_json(cls, d) -> "TailBoundedFunc":
        terms = tuple((rat(t["weight"]), PiecewiseLinear1D.from_json(t)) for t in d.get("terms", ()))
        tail = d.get("tail")
        if tail is None:
            return cls(terms)
        return cls(terms, rat(tail["weight"]), rat(tail["ratio"]), PiecewiseLinear1D.from_json(tail))


def cylinder_range(F: TailBoundedFunc, prefix: Sequence) -> tuple:
    """Image of the cylinder of sequences starting with ``prefix``.

    Coordinates are independent and every component attains its whole range,
    so the image is exactly the partial sum plus the Minkowski sum of the
    scaled component ranges.
    """
    n = len(prefix)
    lo = hi = F.partial_sum(prefix)
    for k in range(n, len(F.terms)):
        a, b = _scaled(F.terms[k][0], F.terms[k][1].range)
        lo, hi = lo + a, hi + b
    if F.has_tail:
        a, b = _scaled(F._geometric_from(n), F.tail_component.range)
        lo, hi = lo + a, hi + b
    return lo, hi


def dyadic_candidates() -> Iterator[Fraction]:
    """0, 1, -1, then the new halves up to 2, the new quarters up to 4, and so on, by size."""
    seen = set()
    for level in itertools.count():
        den = 2 ** level
        bound = 2 ** level * den
        level_vals = sorted(
            (Fraction(m, den) for m in range(-bound, bound + 1)),
            key=lambda q: (abs(q), q < 0),
        )
        for q in level_vals:
            if q not in seen:
                seen.add(q)
                yield q


def _interior(iv, x) -> bool:
    return iv[0] < x < iv[1]


def _meet(a, b):
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo < hi else None


@dataclass(frozen=True)
class CollisionTranscript:
    a_prefix: tuple
    b_prefix: tuple
    intervals: tuple  # L_0, L_1, ...
    tolerance: Fraction  # width of the hull of the two final cylinder images
    value_a: Fraction
    value_b: Fraction
    tail_bound: Fraction
    singleton: bool = False

    @property
    def difference(self) -> Fraction:
        return abs(self.value_a - self.value_b)

    def to_json(self):
        return {
            "a_prefix": [rat_str(x) for x in self.a_prefix],
            "b_prefix": [rat_str(x) for x in self.b_prefix],
            "intervals": [[rat_str(lo), rat_str(hi)] for lo, hi in self.intervals],
            "tolerance": rat_str(self.tolerance),
            "value_a": rat_str(self.value_a),
            "value_b": rat_str(self.value_b),
            "difference": rat_str(self.difference),
            "tail_bound": rat_str(self.tail_bound),
            "singleton": self.singleton,
        }


def _pick(prefix, L, F, budget, step, exclude=None):
    for count, c in enumerate(dyadic_candidates()):
        if count >= budget:
            raise SearchStalled(step)
        if c == exclude:
            continue
        r = cylinder_range(F, prefix + (c,))
        if r[0] == r[1]:
            if _interior(L, r[0]):
                return c, r
            continue
        if _interior(L, (r[0] + r[1]) / 2) and _meet(L, r) is not None:
            return c, r


def find_collision(F: TailBoundedFunc, delta, budget: int = 2 ** 16, max_len: int = 10_000) -> CollisionTranscript:
    """Two distinct rational prefixes whose zero-padded completions differ by less than ``delta`` under F."""
    delta = rat(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    a: tuple = ()
    b: tuple = ()
    L = cylinder_range(F, ())
    if L[0] == L[1]:
        return _singleton(F, (), [L])
    history = [L]
    for step in range(max_len):
        ca, ra = _pick(a, L, F, budget, step)
        a = a + (ca,)
        if ra[0] == ra[1]:
            return _singleton(F, a, history)
        L = _meet(L, ra)
        cb, rb = _pick(b, L, F, budget, step, exclude=ca if step == 0 else None)
        b = b + (cb,)
        if rb[0] == rb[1]:
            return _singleton(F, b, history)
        L = _meet(L, rb)
        history.append(L)
        width = max(ra[1], rb[1]) - min(ra[0], rb[0])
        if width < delta:
            va, vb = F.evaluate_truncated(a), F.evaluate_truncated(b)
            assert abs(va - vb) < delta
            return CollisionTranscript(a, b, tuple(history), width, va, vb, F.tail_bound(len(a)))
    raise SearchStalled(max_len, "prefix length limit reached")


def _singleton(F, prefix, history) -> CollisionTranscript:
    """F is constant on the cylinder of ``prefix``: extend it by 0 and by 1."""
    a, b = tuple(prefix) + (ZERO,), tuple(prefix) + (ONE,)
    va, vb = F.evaluate_truncated(a), F.evaluate_truncated(b)
    assert va == vb
    return CollisionTranscript(a, b, tuple(history), ZERO, va, vb, F.tail_bound(len(a)), True)
