"""Expression DAGs for the constructed maps.

Each map in the construction (the stage maps, the bumps, the glue maps) is
an immutable DAG of the node classes below.  A DAG can be evaluated exactly
at a rational point or enclosed over a rational box; both evaluators walk
the nodes in a cached topological order, so sharing between stages costs
nothing.
"""
from __future__ import annotations

import json
import os
from fractions import Fraction
from typing import Sequence

from . import bend
from .geometry import P, RatBox, RatPoint2, rat, rat_str

ZERO = Fraction(0)


class MissingCoordinate(IndexError):
    def __init__(self, i):
        super().__init__(f"coordinate {i} is not provided")
        self.index = i


class Expr:
    """Base node; identity-compared, immutable after construction."""

    op = "expr"
    args: tuple = ()

    def __setattr__(self, name, value):
        if getattr(self, "_frozen", False):
            raise AttributeError("expression nodes are immutable")
        object.__setattr__(self, name, value)

    def _freeze(self):
        object.__setattr__(self, "_frozen", True)

    def params_json(self) -> dict:
        return {}

    def __repr__(self):
        return f"{type(self).__name__}#{id(self) & 0xFFFF:04x}"


class Const(Expr):
    op = "const"

    def __init__(self, value):
        if isinstance(value, (int, Fraction, str)):
            value = (value,)
        self.value = tuple(rat(v) for v in value)
        self._freeze()

    def params_json(self):
        return {"value": [rat_str(v) for v in self.value]}


class Coord(Expr):
    op = "coord"

    def __init__(self, i: int):
        self.index = int(i)
        self._freeze()

    def params_json(self):
        return {"index": self.index}


class Affine1D(Expr):
    op = "affine"

    def __init__(self, scale, shift, arg: Expr):
        self.scale, self.shift = rat(scale), rat(shift)
        self.args = (arg,)
        self._freeze()

    def params_json(self):
        return {"scale": rat_str(self.scale), "shift": rat_str(self.shift)}


class ClampTriangle(Expr):
    """(x, y) -> (sign(x) * min(|x|, 1 - y), y): the horizontal clamp on both halves."""

    op = "clamp_triangle"

    def __init__(self, arg: Expr):
        self.args = (arg,)
        self._freeze()


class RayProject(Expr):
    """Ray projection onto the cross, direction ``p_right`` for x >= 0 and ``p_left`` for x < 0."""

    op = "ray_project"

    def __init__(self, p_right, p_left, arg: Expr):
        self.p_right, self.p_left = P(*map(rat, p_right)), P(*map(rat, p_left))
        if not (self.p_right.x > 0 and self.p_right.y > 0 and self.p_left.x < 0 and self.p_left.y > 0):
            raise ValueError("ray directions must point into the upper half-plane on their own side")
        self.args = (arg,)
        self._freeze()

    @property
    def slope_right(self):
        return self.p_right.y / self.p_right.x

    @property
    def slope_left(self):
        return self.p_left.y / -self.p_left.x

    def params_json(self):
        return {"p_right": self.p_right.to_json(), "p_left": self.p_left.to_json()}


class Bump(Expr):
    """Tent function: 1 at ``peak``, 0 outside the open box (lo, hi), min over coordinates."""

    op = "bump"

    def __init__(self, box: RatBox, peak: Sequence):
        self.box = box
        self.peak = tuple(rat(c) for c in peak)
        if not box.contains_open(self.peak):
            raise ValueError("bump peak must lie inside the open box")
        self._freeze()

    def params_json(self):
        return {"box": self.box.to_json(), "peak": [rat_str(c) for c in self.peak]}


class Pair(Expr):
    """Concatenation of the argument outputs."""

    op = "pair"

    def __init__(self, *args: Expr):
        self.args = tuple(args)
        self._freeze()


class Compose(Expr):
    """``outer`` evaluated with the outputs of ``inner`` as its coordinates."""

    op = "compose"

    def __init__(self, outer: Expr, inner: Expr):
        self.args = (outer, inner)
        self._freeze()


class BendApply(Expr):
    """The glue map: bend a closed stem piece [l, r] into the piece plus a new stem.

    The argument is a pair (v, y) with v a plane point and y in [0, 1].  When
    v lies on the closed piece, its position along the stem is normalized
    piecewise-affinely (l -> -1, q -> 0, r -> 1), the bend map is applied, and
    the result is mapped back: the bottom edge onto the piece, the axis onto
    the new stem from q to ``tip``.  Off the piece v is returned unchanged.
    """

    op = "bend_apply"

    def __init__(self, axis, const, lo, q, hi, tip, slope_right, slope_left, arg: Expr):
        self.axis = int(axis)
        self.const, self.lo, self.q, self.hi = rat(const), rat(lo), rat(q), rat(hi)
        if not self.lo < self.q < self.hi:
            raise ValueError("need lo < q < hi")
        self.tip = P(*map(rat, tip))
        self.slope_right, self.slope_left = rat(slope_right), rat(slope_left)
        self.args = (arg,)
        self._freeze()

    @property
    def q_point(self) -> RatPoint2:
        return self._point(self.q)

    def _point(self, u):
        return P(u, self.const) if self.axis == 0 else P(self.const, u)

    def normalize(self, u):
        if u <= self.q:
            return (u - self.q) / (self.q - self.lo)
        return (u - self.q) / (self.hi - self.q)

    def denormalize(self, s):
        if s <= 0:
            return self.q + s * (self.q - self.lo)
        return self.q + s * (self.hi - self.q)

    def on_piece(self, v) -> bool:
        return v[1 - self.axis] == self.const and self.lo <= v[self.axis] <= self.hi

    def apply(self, v, y):
        if not self.on_piece(v):
            return tuple(v)
        bx, by = bend.phi_exact(self.normalize(v[self.axis]), y, self.slope_right, self.slope_left)
        if by == 0:
            return tuple(self._point(self.denormalize(bx)))
        qp = self.q_point
        return (qp.x + by * (self.tip.x - qp.x), qp.y + by * (self.tip.y - qp.y))

    def bend_parts(self, v_box, y_iv):
        """Enclosures (as boxes) of the bent images of the part of ``v_box`` on the piece."""
        other = v_box[1 - self.axis]
        u = v_box[self.axis]
        if not (other[0] <= self.const <= other[1]):
            return None, []
        ulo, uhi = max(u[0], self.lo), min(u[1], self.hi)
        if ulo > uhi:
            return None, []
        clip = RatBox(((ulo, uhi), (self.const, self.const)) if self.axis == 0 else ((self.const, self.const), (ulo, uhi)))
        bottom, top = bend.phi_parts_interval(
            (self.normalize(ulo), self.normalize(uhi)), y_iv, self.slope_right, self.slope_left
        )
        parts = []
        if bottom is not None:
            a, b = self.denormalize(bottom[0]), self.denormalize(bottom[1])
            parts.append(RatBox.point(self._point(a)).hull(RatBox.point(self._point(b))))
        if top is not None:
            qp = self.q_point
            ends = [(qp.x + s * (self.tip.x - qp.x), qp.y + s * (self.tip.y - qp.y)) for s in top]
            parts.append(RatBox.point(ends[0]).hull(RatBox.point(ends[1])))
        return clip, parts

    def params_json(self):
        return {
            "axis": self.axis,
            "const": rat_str(self.const),
            "lo": rat_str(self.lo),
            "q": rat_str(self.q),
            "hi": rat_str(self.hi),
            "tip": self.tip.to_json(),
            "slope_right": rat_str(self.slope_right),
            "slope_left": rat_str(self.slope_left),
        }


# -- traversal -------------------------------------------------------------------


def topo_order(root: Expr) -> list:
    """Postorder of the DAG under ``root`` (each node once, children first)."""
    cached = getattr(root, "_topo", None)
    if cached is not None:
        return cached
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(_children(node)):
            if id(child) not in seen:
                stack.append((child, False))
    object.__setattr__(root, "_topo", order)
    return order


def _children(node):
    # Compose's outer is evaluated in a different coordinate frame
    return node.args[1:] if isinstance(node, Compose) else node.args


# -- exact evaluation ------------------------------------------------------------


def _eval_point(root: Expr, x: tuple) -> tuple:
    vals = {}
    for node in topo_order(root):
        vals[id(node)] = _exact_node(node, x, vals)
    return vals[id(root)]


def _exact_node(node, x, vals):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Coord):
        if node.index >= len(x):
            raise MissingCoordinate(node.index)
        return (x[node.index],)
    if isinstance(node, Compose):
        return _eval_point(node.args[0], vals[id(node.args[1])])
    a = [vals[id(c)] for c in node.args]
    if isinstance(node, Affine1D):
        return (node.scale * a[0][0] + node.shift,)
    if isinstance(node, Pair):
        return tuple(v for part in a for v in part)
    if isinstance(node, ClampTriangle):
        px, py = a[0]
        c = min(abs(px), 1 - py)
        return (c if px >= 0 else -c, py)
    if isinstance(node, RayProject):
        px, py = a[0]
        return bend.ray_exact(px, py, node.slope_right, node.slope_left)
    if isinstance(node, Bump):
        return (_tent_min(node, x),)
    if isinstance(node, BendApply):
        vx, vy, y = a[0]
        return node.apply((vx, vy), y)
    raise TypeError(f"unknown node {node!r}")


def _tent(lo, peak, hi, t):
    if t <= lo or t >= hi:
        return ZERO
    if t <= peak:
        return (t - lo) / (peak - lo)
    return (hi - t) / (hi - peak)


def _tent_min(node: Bump, x):
    if len(x) < node.box.dim:
        raise MissingCoordinate(len(x))
    return min(_tent(lo, pk, hi, t) for (lo, hi), pk, t in zip(node.box, node.peak, x))


def eval_exact(e: Expr, x: Sequence):
    """Exact value of ``e`` at the rational point ``x``.

    Two-dimensional results come back as a :class:`RatPoint2`, scalars as a
    Fraction, anything else as a tuple.
    """
    out = _eval_point(e, tuple(rat(c) for c in x))
    if len(out) == 2:
        return P(*out)
    if len(out) == 1:
        return out[0]
    return out


# -- interval evaluation ---------------------------------------------------------


def _eval_box(root: Expr, box: tuple, vals=None) -> dict:
    vals = {} if vals is None else vals
    for node in topo_order(root):
        if id(node) not in vals:
            vals[id(node)] = _interval_node(node, box, vals)
    return vals


def _interval_node(node, box, vals):
    if isinstance(node, Const):
        return tuple((v, v) for v in node.value)
    if isinstance(node, Coord):
        if node.index >= len(box):
            raise MissingCoordinate(node.index)
        return (box[node.index],)
    if isinstance(node, Compose):
        outer = node.args[0]
        return _eval_box(outer, vals[id(node.args[1])])[id(outer)]
    a = [vals[id(c)] for c in node.args]
    if isinstance(node, Affine1D):
        lo, hi = a[0][0]
        ends = (node.scale * lo + node.shift, node.scale * hi + node.shift)
        return ((min(ends), max(ends)),)
    if isinstance(node, Pair):
        return tuple(iv for part in a for iv in part)
    if isinstance(node, ClampTriangle):
        (xlo, xhi), (ylo, yhi) = a[0]
        pieces = []
        if xhi >= 0:
            lo = max(xlo, ZERO)
            pieces.append((min(lo, 1 - yhi), min(xhi, 1 - ylo)))
        if xlo < 0:
            lo = max(-xhi, ZERO)
            pieces.append((-min(-xlo, 1 - ylo), -min(lo, 1 - yhi)))
        return ((min(p[0] for p in pieces), max(p[1] for p in pieces)), a[0][1])
    if isinstance(node, RayProject):
        bottom, top = bend.ray_parts_interval(a[0][0], a[0][1], node.slope_right, node.slope_left)
        parts = []
        if bottom is not None:
            parts.append((bottom, (ZERO, ZERO)))
        if top is not None:
            parts.append(((ZERO, ZERO), top))
        return _hull_ivs(parts)
    if isinstance(node, Bump):
        if len(box) < node.box.dim:
            raise MissingCoordinate(len(box))
        los, his = [], []
        for (lo, hi), pk, (tlo, thi) in zip(node.box, node.peak, box):
            ends = (_tent(lo, pk, hi, tlo), _tent(lo, pk, hi, thi))
            los.append(min(ends))
            his.append(Fraction(1) if tlo <= pk <= thi else max(ends))
        return ((min(los), min(his)),)
    if isinstance(node, BendApply):
        vx, vy, y = a[0]
        if y == (ZERO, ZERO):
            return (vx, vy)
        v_box = RatBox((vx, vy))
        clip, parts = node.bend_parts(v_box, y)
        fully_on = clip is not None and clip == v_box
        if not fully_on:
            parts.append(v_box)
        out = parts[0]
        for p in parts[1:]:
            out = out.hull(p)
        return out.intervals
    raise TypeError(f"unknown node {node!r}")


def _hull_ivs(parts):
    out = list(parts[0])
    for p in parts[1:]:
        out = [(min(a[0], b[0]), max(a[1], b[1])) for a, b in zip(out, p)]
    return tuple(out)


def eval_interval(e: Expr, b) -> RatBox:
    """Box enclosing the image of the box ``b`` under ``e``."""
    box = b.intervals if isinstance(b, RatBox) else tuple((rat(lo), rat(hi)) for lo, hi in b)
    return RatBox(_eval_box(e, box)[id(e)])


# -- sup-norm differences --------------------------------------------------------


def default_depth() -> int:
    return int(os.environ.get("OAKLIFT_DEPTH", "4"))


def _spread(b1, b2) -> Fraction:
    """Max-norm bound on |u - v| over u in b1, v in b2."""
    return max(
        (max(h1 - l2, h2 - l1) for (l1, h1), (l2, h2) in zip(b1, b2)),
        default=ZERO,
    )


def _bend_chain(top: Expr, bottom: Expr):
    """The BendApply nodes leading from ``top`` down to ``bottom`` through their stem argument."""
    chain, cur = [], top
    while cur is not bottom:
        if not isinstance(cur, BendApply):
            return None
        pair = cur.args[0]
        if not isinstance(pair, Pair) or len(pair.args) != 2:
            return None
        chain.append(cur)
        cur = pair.args[0]
    return chain


def _step_bound(node: BendApply, vals) -> Fraction:
    v_expr, y_expr = node.args[0].args
    (ylo, yhi), = vals[id(y_expr)]
    if yhi <= 0:
        return ZERO
    clip, parts = node.bend_parts(RatBox(vals[id(v_expr)]), (max(ylo, ZERO), yhi))
    if clip is None:
        return ZERO
    return max((_spread(clip, p) for p in parts), default=ZERO)


def same_structure(e1: Expr, e2: Expr) -> bool:
    """True when the two DAGs denote the same expression node for node."""
    if e1 is e2:
        return True
    ids: dict = {}
    table: dict = {}

    def number(root):
        stack = [(root, False)]
        while stack:
            node, done = stack.pop()
            if id(node) in ids:
                continue
            if not done:
                stack.append((node, True))
                stack.extend((c, False) for c in node.args if id(c) not in ids)
                continue
            key = (node.op, json.dumps(node.params_json(), sort_keys=True), tuple(ids[id(c)] for c in node.args))
            ids[id(node)] = table.setdefault(key, len(table))
        return ids[id(root)]

    return number(e1) == number(e2)


def diff_bound_on_box(e1: Expr, e2: Expr, box) -> Fraction:
    """Bound on max |e1 - e2| over one box.

    When one expression is obtained from the other by a chain of glue maps,
    each glue step moves points only inside its own bent piece, so the bound
    is the sum of the per-step spreads; otherwise the two enclosures are
    compared directly.
    """
    if e1 is e2:
        return ZERO
    box = box.intervals if isinstance(box, RatBox) else box
    for top, bottom in ((e2, e1), (e1, e2)):
        chain = _bend_chain(top, bottom)
        if chain is not None:
            vals = _eval_box(top, box)
            return sum((_step_bound(node, vals) for node in chain), ZERO)
    vals = _eval_box(e1, box)
    _eval_box(e2, box, vals)
    return _spread(vals[id(e1)], vals[id(e2)])


def sup_diff_bound(e1: Expr, e2: Expr, domain: RatBox, depth: int = None) -> Fraction:
    """Upper bound on the sup over ``domain`` of the max-norm of e1 - e2."""
    if depth is None:
        depth = default_depth()
    if same_structure(e1, e2):
        return ZERO
    boxes = [domain]
    for _ in range(depth):
        boxes = [half for b in boxes for half in b.bisect()]
    return max(diff_bound_on_box(e1, e2, b) for b in boxes)


# -- serialization ---------------------------------------------------------------

_KINDS = {
    cls.op: cls
    for cls in (Const, Coord, Affine1D, ClampTriangle, RayProject, Bump, Pair, Compose, BendApply)
}


def dag_to_json(roots: dict) -> dict:
    """Serialize named roots sharing one node table (deterministic ordering)."""
    ids, nodes = {}, []

    def visit(root):
        order, seen, stack = [], set(), [(root, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen or id(node) in ids:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in reversed(node.args):
                stack.append((child, False))
        for node in order:
            if id(node) in ids:
                continue
            ids[id(node)] = len(nodes)
            nodes.append({"op": node.op, **node.params_json(), "args": [ids[id(c)] for c in node.args]})

    for name in roots:
        visit(roots[name])
    return {"nodes": nodes, "roots": {name: ids[id(e)] for name, e in roots.items()}}


def dag_from_json(data) -> dict:
    built = []
    for d in data["nodes"]:
        args = [built[i] for i in d["args"]]
        op = d["op"]
        if op == "const":
            e = Const(d["value"])
        elif op == "coord":
            e = Coord(d["index"])
        elif op == "affine":
            e = Affine1D(d["scale"], d["shift"], *args)
        elif op == "clamp_triangle":
            e = ClampTriangle(*args)
        elif op == "ray_project":
            e = RayProject(RatPoint2.from_json(d["p_right"]), RatPoint2.from_json(d["p_left"]), *args)
        elif op == "bump":
            e = Bump(RatBox.from_json(d["box"]), d["peak"])
        elif op == "pair":
            e = Pair(*args)
        elif op == "compose":
            e = Compose(*args)
        elif op == "bend_apply":
            e = BendApply(
                d["axis"], d["const"], d["lo"], d["q"], d["hi"], RatPoint2.from_json(d["tip"]),
                d["slope_right"], d["slope_left"], *args,
            )
        else:
            raise ValueError(f"unknown node kind {op!r}")
        built.append(e)
    return {name: built[i] for name, i in data["roots"].items()}
