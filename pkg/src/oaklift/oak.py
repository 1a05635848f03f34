"""Oaks: finite rooted trees of sprigs.

A sprig is a triple (base point p, stem segment I starting at p, open
neighborhood U of I minus p).  In an oak every son (q, J, V) of (p, I, U)
has q on I \\ {p}, closure(V) inside U and meeting I only at q (condition A),
and distinct sons have disjoint closed neighborhoods (condition B).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .geometry import (
    P,
    RatPoint2,
    Segment,
    Wedge,
    closed_wedge_inside_open_wedge,
    closed_wedge_meets_segment_only_at,
    closed_wedges_disjoint,
    point_on_segment,
    wedge_closure_contains_point,
    wedge_contains_point,
)


class WouldViolateOak(ValueError):
    def __init__(self, condition: str, message: str, other: Optional[int] = None):
        super().__init__(f"({condition}) {message}")
        self.condition = condition
        self.other = other


@dataclass(frozen=True)
class Sprig:
    base: RatPoint2
    stem: Segment
    hood: Wedge

    @property
    def tip(self) -> RatPoint2:
        return self.stem.b

    def problems(self) -> list:
        """Violations of the sprig conditions (a)-(c)."""
        out = []
        if self.stem.a != self.base:
            out.append("stem does not start at the base point")
        if self.stem.a == self.stem.b:
            out.append("stem is degenerate")
        if not self.hood.is_plane:
            # convex hood: closure holds the base and the interior holds the tip,
            # so the half-open stem (base, tip] is interior
            if not wedge_closure_contains_point(self.hood, self.base):
                out.append("hood closure misses the base point")
            if not wedge_contains_point(self.hood, self.stem.b):
                out.append("hood is not a neighborhood of the stem minus its base")
        return out

    def to_json(self):
        return {"base": self.base.to_json(), "stem": self.stem.to_json(), "hood": self.hood.to_json()}

    @classmethod
    def from_json(cls, data) -> "Sprig":
        return cls(
            RatPoint2.from_json(data["base"]),
            Segment.from_json(data["stem"]),
            Wedge.from_json(data["hood"]),
        )


@dataclass(frozen=True)
class Violation:
    condition: str  # "sprig", "tree", "A" or "B"
    node: int
    other: Optional[int]
    message: str

    def __str__(self):
        other = "" if self.other is None else f" / node {self.other}"
        return f"({self.condition}) node {self.node}{other}: {self.message}"


@dataclass(frozen=True)
class OakPointClass:
    tag: str  # "crown", "rest", "knot" (a rest point that is a knot) or "outside"
    node: Optional[int] = None

    @property
    def in_crown(self) -> bool:
        return self.tag == "crown"

    @property
    def in_rest(self) -> bool:
        return self.tag in ("rest", "knot")


@dataclass(frozen=True)
class Oak:
    nodes: tuple
    parent: tuple
    root: int = 0
    _sons: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        sons = {i: [] for i in range(len(self.nodes))}
        for i, par in enumerate(self.parent):
            if par is not None and par in sons:
                sons[par].append(i)
        object.__setattr__(self, "_sons", sons)

    @classmethod
    def initial(cls) -> "Oak":
        """The single sprig p=(0,0), I=[0,1]x{0}, U=R^2."""
        root = Sprig(P.of(0, 0), Segment(P.of(0, 0), P.of(1, 0)), Wedge.plane())
        return cls((root,), (None,), 0)

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, i) -> Sprig:
        return self.nodes[i]

    def sons(self, i) -> list:
        return list(self._sons[i])

    def leaves(self) -> list:
        return [i for i in range(len(self.nodes)) if not self._sons[i]]

    def is_leaf(self, i) -> bool:
        return not self._sons[i]

    def depth(self, i) -> int:
        d = 0
        while self.parent[i] is not None:
            i = self.parent[i]
            d += 1
            if d > len(self.nodes):
                raise ValueError("parent map has a cycle")
        return d

    def height(self) -> int:
        return max(self.depth(i) for i in range(len(self.nodes)))

    def is_ancestor_or_self(self, anc, i) -> bool:
        while i is not None:
            if i == anc:
                return True
            i = self.parent[i]
        return False

    def knots(self) -> list:
        return [s.base for s in self.nodes]

    def add_sprig(self, parent_idx: int, s: Sprig) -> "Oak":
        """Return a new oak with ``s`` appended as a son of ``parent_idx``."""
        for msg in s.problems():
            raise WouldViolateOak("sprig", msg)
        par = self.nodes[parent_idx]
        reason = _condition_a(par, s)
        if reason:
            raise WouldViolateOak("A", reason)
        for sib in self._sons[parent_idx]:
            if not closed_wedges_disjoint(self.nodes[sib].hood, s.hood):
                raise WouldViolateOak("B", f"closed hood meets sibling {sib}", other=sib)
        return Oak(self.nodes + (s,), self.parent + (parent_idx,), self.root)

    def classify_point(self, p) -> OakPointClass:
        p = P(*p)
        for i in self.leaves():
            s = self.nodes[i]
            if p != s.base and point_on_segment(p, s.stem):
                return OakPointClass("crown", i)
        for i, s in enumerate(self.nodes):
            if p == s.base:
                return OakPointClass("knot", i)
        for i, s in enumerate(self.nodes):
            if point_on_segment(p, s.stem):
                return OakPointClass("rest", i)
        return OakPointClass("outside")

    def to_json(self):
        return {
            "nodes": [s.to_json() for s in self.nodes],
            "parent": list(self.parent),
            "root": self.root,
        }

    @classmethod
    def from_json(cls, data) -> "Oak":
        return cls(
            tuple(Sprig.from_json(d) for d in data["nodes"]),
            tuple(data["parent"]),
            data["root"],
        )


def _condition_a(par: Sprig, son: Sprig) -> Optional[str]:
    q = son.base
    if q == par.base or not point_on_segment(q, par.stem):
        return "son base is not on the parent stem minus its base"
    if son.hood.is_plane:
        return "son hood must be a bounded wedge"
    if not closed_wedge_inside_open_wedge(son.hood, par.hood):
        return "closed son hood is not inside the parent hood"
    if not closed_wedge_meets_segment_only_at(son.hood, par.stem, q):
        return "closed son hood meets the parent stem outside the son base"
    return None


def validate(o: Oak) -> list:
    """Every violated condition of ``o``; an empty list means a valid oak."""
    report = []
    n = len(o.nodes)
    if len(o.parent) != n:
        return [Violation("tree", o.root, None, "parent map length mismatch")]
    if not 0 <= o.root < n or o.parent[o.root] is not None:
        report.append(Violation("tree", o.root, None, "root must exist and have no parent"))
    for i, par in enumerate(o.parent):
        if i != o.root and (par is None or not 0 <= par < n):
            report.append(Violation("tree", i, par, "dangling parent"))
    if report:
        return report
    for i in range(n):
        try:
            o.depth(i)
        except ValueError:
            return [Violation("tree", i, None, "parent map has a cycle")]
    for i, s in enumerate(o.nodes):
        for msg in s.problems():
            report.append(Violation("sprig", i, None, msg))
    for i, par in enumerate(o.parent):
        if par is None:
            continue
        reason = _condition_a(o.nodes[par], o.nodes[i])
        if reason:
            report.append(Violation("A", i, par, reason))
    for i in range(n):
        sons = o.sons(i)
        for k, s1 in enumerate(sons):
            for s2 in sons[k + 1:]:
                if not closed_wedges_disjoint(o.nodes[s1].hood, o.nodes[s2].hood):
                    report.append(Violation("B", s1, s2, "sibling closed hoods intersect"))
    return report


def is_subtree(t: Oak, p: Oak) -> bool:
    """T is a subtree of P: P extends T node-for-node with the same parents."""
    if len(t.nodes) > len(p.nodes) or t.root != p.root:
        return False
    return t.nodes == p.nodes[: len(t.nodes)] and t.parent == p.parent[: len(t.parent)]


def leaves(o: Oak) -> list:
    return o.leaves()


def classify_point(o: Oak, p) -> OakPointClass:
    return o.classify_point(p)


def add_sprig(o: Oak, parent_idx: int, s: Sprig) -> Oak:
    return o.add_sprig(parent_idx, s)
