"""The limit map on countable products and its injectivity certificates.

Stage n carries an oak T_n and a map f_n on X^n (depending only on its first
n - 1 coordinates).  Each new stage runs :func:`oaklift.lift.evolve` over the
enumerated points of Q^n with budget 1/2**n and the separating cover W_n, so
the stage maps converge uniformly to a map on X^omega that is injective on
Q^omega.
"""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import funcexpr as fx
from .geometry import (
    RatBox,
    RatPoint2,
    distance_lower_bound,
    rat,
    rat_str,
    wedge_contains_point,
)
from .lift import CoverFamily, LiftResult, Space1D, StepRecord, evolve, locate_leaf
from .oak import Oak, is_subtree

ONE = Fraction(1)


class InsufficientStages(RuntimeError):
    def __init__(self, needed: int, message: str = ""):
        super().__init__(message or f"need at least {needed} built stages")
        self.needed = needed


class StreamsEqual(ValueError):
    pass


class CertificateBroken(AssertionError):
    pass


# -- streams ---------------------------------------------------------------------


@dataclass(frozen=True)
class Stream:
    """Eventually periodic sequence: ``head`` followed by ``tail`` repeated forever."""

    head: tuple
    tail: tuple

    def __post_init__(self):
        if not self.tail:
            raise ValueError("the periodic tail must be non-empty")

    @classmethod
    def parse(cls, text: str, convert=int) -> "Stream":
        """Parse ``"0,1,(2)"`` or ``"0,(1,2)"``: head items, then the parenthesized period."""
        text = text.replace(" ", "")
        m = re.fullmatch(r"(?:(.*?),)?\((.+)\)", text)
        if not m:
            raise ValueError(f"stream {text!r} needs a parenthesized periodic tail")
        head = tuple(convert(t) for t in m.group(1).split(",")) if m.group(1) else ()
        tail = tuple(convert(t) for t in m.group(2).split(","))
        return cls(head, tail)

    def at(self, k: int):
        if k < len(self.head):
            return self.head[k]
        return self.tail[(k - len(self.head)) % len(self.tail)]

    def prefix(self, n: int) -> tuple:
        return tuple(self.at(k) for k in range(n))

    def first_difference(self, other: "Stream") -> Optional[int]:
        span = max(len(self.head), len(other.head)) + math.lcm(len(self.tail), len(other.tail))
        for k in range(span):
            if self.at(k) != other.at(k):
                return k
        return None

    def map(self, fn) -> "Stream":
        return Stream(tuple(map(fn, self.head)), tuple(map(fn, self.tail)))

    def __str__(self):
        head = "".join(f"{h}," for h in self.head)
        return f"{head}({','.join(str(t) for t in self.tail)})"


QStream = Stream  # streams of indices into the enumeration of Q


@dataclass(frozen=True)
class Enclosure:
    box: RatBox
    stage: int
    tail_bound: Fraction


@dataclass(frozen=True)
class SeparationCertificate:
    stage: int
    leaf_a: int
    leaf_b: int
    gap: Fraction
    prefix_len: int
    a: str = ""
    b: str = ""

    def to_json(self):
        return {
            "stage": self.stage,
            "leaf_a": self.leaf_a,
            "leaf_b": self.leaf_b,
            "gap": rat_str(self.gap),
            "prefix_len": self.prefix_len,
            "a": self.a,
            "b": self.b,
        }

    @classmethod
    def from_json(cls, d) -> "SeparationCertificate":
        return cls(d["stage"], d["leaf_a"], d["leaf_b"], rat(d["gap"]), d["prefix_len"], d["a"], d["b"])


# -- covers ------------------------------------------------------------------------


def cover_radius(q: Sequence, n: int) -> Fraction:
    """A third of the least gap among the first n enumerated points (1 when there is no gap)."""
    d = list(q[:n])
    gaps = [abs(x - y) for x, y in itertools.combinations(d, 2)]
    return min(gaps) / 3 if gaps else ONE


def build_covers(q: Sequence, n: int, coordinate_points: Optional[Sequence] = None) -> CoverFamily:
    """Open cover of Q^n by products of equal balls, each ball holding at most one of the first n points.

    ``coordinate_points[k]`` restricts the centres used in coordinate k (the
    heterogeneous case); by default every coordinate uses all of Q.
    """
    if n < 1:
        raise ValueError("n must be positive")
    q = [rat(x) for x in q]
    r = cover_radius(q, n)
    if coordinate_points is None:
        coordinate_points = [q] * n
    elements, centers = [], []
    for center in itertools.product(*coordinate_points[:n]):
        elements.append(RatBox(tuple((c - r, c + r) for c in center)))
        centers.append(center)
    return CoverFamily(tuple(elements), tuple(centers))


def separating_index(a: Stream, b: Stream) -> int:
    """max{k, i, j} + 1 where k is the first differing position and a(k) = x_i, b(k) = x_j."""
    k = a.first_difference(b)
    if k is None:
        raise StreamsEqual("streams are equal")
    return max(k, a.at(k), b.at(k)) + 1


# -- the limit map -------------------------------------------------------------------


@dataclass(frozen=True)
class Factor:
    space: Space1D
    indices: tuple  # positions in the global enumeration of Q


@dataclass
class LimitMap:
    q: list
    factors: list
    oaks: list  # T_1, ..., T_N
    funcs: list  # f_1, ..., f_N
    covers: list = field(default_factory=list)  # W_1, ..., W_{N-1}
    lifts: list = field(default_factory=list)  # evolve results, one per built transition
    norm_bounds: list = field(default_factory=list)  # bound on |f_{n+1} - f_n|, n = 1..N-1

    @property
    def stages(self) -> int:
        return len(self.oaks)

    def factor(self, k: int) -> Factor:
        return self.factors[k % len(self.factors)]

    def coordinate_points(self, n: int) -> list:
        return [[self.q[i] for i in self.factor(k).indices] for k in range(n)]

    def stage_points(self, n: int) -> list:
        """The enumerated points of Q^n, lexicographic in the enumeration of Q."""
        return list(itertools.product(*self.coordinate_points(n)))

    def domain(self, n: int) -> RatBox:
        return RatBox(tuple(self.factor(k).space.hull(self.q) for k in range(n)))

    def values(self, s: Stream) -> Stream:
        return s.map(lambda i: self.q[i])

    def stage_value(self, n: int, x: Stream) -> RatPoint2:
        """f_n at the first n coordinates of the value stream x."""
        return fx.eval_exact(self.funcs[n - 1], x.prefix(n))

    def tail_bound(self, n: int) -> Fraction:
        """Bound on |f - h_n|: the sum of 1/2**k over k >= n."""
        return Fraction(2, 2 ** n)


def initial_map() -> fx.Expr:
    return fx.Const((1, 0))


def build_limit(
    space: Space1D,
    q: Sequence,
    stages: int,
    factors: Optional[Sequence[Factor]] = None,
    depth: Optional[int] = None,
    check_norms: bool = True,
) -> LimitMap:
    if stages < 1:
        raise ValueError("stages must be at least 1")
    q = [rat(x) for x in q]
    if len(set(q)) != len(q):
        raise ValueError("Q enumeration has repeated points")
    if factors is None:
        factors = [Factor(space, tuple(range(len(q))))]
    for fac in factors:
        for i in fac.indices:
            if not fac.space.contains(q[i]):
                raise ValueError(f"{q[i]} is not in {fac.space}")
    m = LimitMap(q, list(factors), [Oak.initial()], [initial_map()])
    for _ in range(1, stages):
        extend(m, depth=depth, check_norms=check_norms)
    return m


def extend(m: LimitMap, depth: Optional[int] = None, check_norms: bool = True) -> None:
    """Build stage N + 1 from stage N in place."""
    n = m.stages
    eps = Fraction(1, 2 ** n)
    cover = build_covers(m.q, n, m.coordinate_points(n))
    result: LiftResult = evolve(m.oaks[-1], m.funcs[-1], m.stage_points(n), cover, eps)
    m.covers.append(cover)
    m.lifts.append(result)
    m.oaks.append(result.oak)
    m.funcs.append(result.func)
    if check_norms:
        bound = fx.sup_diff_bound(m.funcs[-2], m.funcs[-1], m.domain(n), depth)
        if bound >= eps:
            raise AssertionError(f"stage {n}: norm bound {bound} is not below {eps}")
        m.norm_bounds.append(bound)


def evaluate(m: LimitMap, x: Stream, delta) -> Enclosure:
    """Certified box around f(x) for a stream of rational coordinates.

    Uses the deepest built stage N.  If h_N(x) is on the rest of T_N the value
    is final.  Otherwise f(x) lies within the tail bound of h_N(x) and inside
    the closed hood of the leaf carrying h_N(x); the box is the intersection.
    Coordinates past N are never read.
    """
    delta = rat(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = m.stages
    v = m.stage_value(n, x)
    tail = m.tail_bound(n)
    cls = m.oaks[-1].classify_point(v)
    if cls.in_rest:
        box = RatBox.point(v)
    else:
        box = RatBox.point(v).inflate(tail)
        if cls.in_crown:
            hood_box = m.oaks[-1][cls.node].hood.bbox()
            if hood_box is not None:
                box = box.intersect(hood_box)
    if box.width() > 2 * delta:
        needed = 1
        while m.tail_bound(needed) > delta:
            needed += 1
        raise InsufficientStages(max(needed, n + 1), f"enclosure width {box.width()} exceeds {2 * delta}")
    return Enclosure(box, n, tail)


def separate(m: LimitMap, a: Stream, b: Stream) -> SeparationCertificate:
    """Certify f(a) != f(b) for distinct index streams a, b over Q."""
    k = a.first_difference(b)
    if k is None:
        raise StreamsEqual(f"{a} and {b} are the same stream")
    va, vb = m.values(a), m.values(b)
    stage = None
    for n in range(1, m.stages):
        if not m.covers[n - 1].some_element_contains_both(va.prefix(n), vb.prefix(n)):
            stage = n
            break
    if stage is None:
        needed = separating_index(a, b) + 1
        raise InsufficientStages(needed, f"no built cover separates {a} and {b}; build {needed} stages")
    n = stage
    oak = m.oaks[n]
    leaf_a = locate_leaf(oak, m.stage_value(n + 1, va))
    leaf_b = locate_leaf(oak, m.stage_value(n + 1, vb))
    if leaf_a == leaf_b:
        raise CertificateBroken(f"prefixes of length {n} share leaf {leaf_a}")
    gap = distance_lower_bound(oak[leaf_a].hood, oak[leaf_b].hood)
    for leaf, s in ((leaf_a, va), (leaf_b, vb)):
        hood = oak[leaf].hood
        for later in range(n + 1, m.stages + 1):
            v = m.stage_value(later, s)
            t = locate_leaf(m.oaks[later - 1], v)
            if not m.oaks[later - 1].is_ancestor_or_self(leaf, t) or not wedge_contains_point(hood, v):
                raise CertificateBroken(f"stage {later} value leaves the hood of leaf {leaf}")
    return SeparationCertificate(n, leaf_a, leaf_b, gap, n, str(a), str(b))


def check_nesting(m: LimitMap) -> bool:
    return all(is_subtree(s, t) for s, t in zip(m.oaks, m.oaks[1:]))


# -- heterogeneous factors -------------------------------------------------------------


@dataclass(frozen=True)
class Embedding:
    space: Space1D
    q: list
    factors: list


def embed_heterogeneous(spaces: Sequence) -> Embedding:
    """Place factor k on the block [2k, 2k+1] after an affine squeeze, union the spaces and Q-sets.

    ``spaces`` holds ``(Space1D, Q_k)`` pairs; factors are reused cyclically
    for coordinates beyond their number.  A single factor is left unchanged.
    """
    if len(spaces) == 1:
        sp, qs = spaces[0]
        qs = [rat(x) for x in qs]
        return Embedding(sp, qs, [Factor(sp, tuple(range(len(qs))))])
    pieces, q, factors = [], [], []
    for k, (sp, qs) in enumerate(spaces):
        lo, hi = sp.hull(qs)
        if (lo, hi) == (0, 1) or (hi - lo <= 1 and lo >= 0 and hi <= 1):
            scale, shift = ONE, Fraction(2 * k)
        else:
            scale, shift = 1 / (hi - lo), Fraction(2 * k) - lo / (hi - lo)
        moved = Space1D(
            tuple(
                (
                    (lo if a is None else a) * scale + shift,
                    (hi if b is None else b) * scale + shift,
                )
                for a, b in sp.pieces
            )
        )
        start = len(q)
        q.extend(rat(x) * scale + shift for x in qs)
        pieces.extend(moved.pieces)
        factors.append(Factor(moved, tuple(range(start, len(q)))))
    return Embedding(Space1D(tuple(sorted(pieces))), q, factors)


# -- files -------------------------------------------------------------------------------

MANIFEST_VERSION = 1


def dump_json(obj, path) -> None:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def save_limit(m: LimitMap, outdir, depth: Optional[int] = None) -> Path:
    """Write oaks, the shared expression DAG and the per-stage transcripts; return the manifest path."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    oak_files, transcript_files = [], []
    for n, oak in enumerate(m.oaks, start=1):
        name = f"oak_{n}.json"
        dump_json(oak.to_json(), out / name)
        oak_files.append(name)
    dump_json(fx.dag_to_json({f"f_{n}": f for n, f in enumerate(m.funcs, start=1)}), out / "dag.json")
    for n, (cover, lift) in enumerate(zip(m.covers, m.lifts), start=1):
        name = f"transcript_{n}.json"
        dump_json(
            {
                "stage": n,
                "eps": rat_str(Fraction(1, 2 ** n)),
                "cover": cover.to_json(),
                "records": [r.to_json() for r in lift.records],
            },
            out / name,
        )
        transcript_files.append(name)
    manifest = {
        "version": MANIFEST_VERSION,
        "q": [rat_str(x) for x in m.q],
        "factors": [{"space": str(f.space), "indices": list(f.indices)} for f in m.factors],
        "stages": m.stages,
        "oaks": oak_files,
        "dag": "dag.json",
        "transcripts": transcript_files,
        "norm_checks": [
            {"stage": n, "bound": rat_str(b), "eps": rat_str(Fraction(1, 2 ** n))}
            for n, b in enumerate(m.norm_bounds, start=1)
        ],
        "depth": fx.default_depth() if depth is None else depth,
    }
    path = out / "manifest.json"
    dump_json(manifest, path)
    return path


def load_limit(manifest_path) -> LimitMap:
    """Rebuild a LimitMap from its files alone (no construction is rerun)."""
    path = Path(manifest_path)
    base = path.parent
    man = load_json(path)
    if man.get("version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest version {man.get('version')!r}")
    q = [rat(x) for x in man["q"]]
    factors = [Factor(Space1D.parse(f["space"]), tuple(f["indices"])) for f in man["factors"]]
    oaks = [Oak.from_json(load_json(base / name)) for name in man["oaks"]]
    roots = fx.dag_from_json(load_json(base / man["dag"]))
    funcs = [roots[f"f_{n}"] for n in range(1, len(oaks) + 1)]
    covers, lifts = [], []
    for name in man["transcripts"]:
        data = load_json(base / name)
        covers.append(CoverFamily.from_json(data["cover"]))
        n = data["stage"]
        records = [StepRecord.from_json(r) for r in data["records"]]
        lifts.append(LiftResult(oaks[n], funcs[n], records))
    bounds = [rat(c["bound"]) for c in man["norm_checks"]]
    if len(oaks) != man["stages"] or len(covers) != len(oaks) - 1:
        raise ValueError("manifest stage count does not match its files")
    return LimitMap(q, factors, oaks, funcs, covers, lifts, bounds)
