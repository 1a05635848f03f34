"""Command-line front end.

Exit codes: 0 success, 2 construction, parse or missing-stage errors,
3 equal streams, 4 not enough stages built, 5 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import bend
from . import funcexpr as fx
from . import product as pr
from .collision import SearchStalled, TailBoundedFunc, find_collision
from .geometry import RatBox, rat, rat_str
from .lift import PlacementFailed, ShrinkFailed, Space1D
from .oak import Oak, WouldViolateOak, is_subtree, validate

EXIT_OK, EXIT_BUILD, EXIT_EQUAL, EXIT_STAGES, EXIT_VERIFY = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def parse_q(text: str) -> list:
    try:
        q = [rat(t) for t in text.replace(" ", "").split(",") if t]
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(EXIT_BUILD, f"cannot parse Q {text!r}: {exc}") from None
    if not q:
        raise CliError(EXIT_BUILD, "Q is empty")
    return q


def parse_factor(text: str):
    """``SPACE:Q``, e.g. ``[0,1]:1/2,1/3``."""
    space, _, q = text.partition(":")
    return Space1D.parse(space), parse_q(q)


def box_str(box: RatBox) -> str:
    return " x ".join(f"[{rat_str(lo)}, {rat_str(hi)}]" for lo, hi in box)


def _load(manifest) -> pr.LimitMap:
    try:
        return pr.load_limit(manifest)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(EXIT_BUILD, f"cannot load {manifest}: {exc}") from None


# -- build -------------------------------------------------------------------------


def cmd_build(args) -> int:
    try:
        if args.from_manifest:
            man = pr.load_json(args.from_manifest)
            q = [rat(x) for x in man["q"]]
            factors = [pr.Factor(Space1D.parse(f["space"]), tuple(f["indices"])) for f in man["factors"]]
            space, args.stages = factors[0].space, man["stages"]
            if args.depth is None:
                args.depth = man.get("depth")
        elif args.factor:
            emb = pr.embed_heterogeneous([parse_factor(f) for f in args.factor])
            space, q, factors = emb.space, emb.q, emb.factors
        else:
            space, q, factors = Space1D.parse(args.space), parse_q(args.q), None
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(EXIT_BUILD, f"parse error: {exc}") from None
    try:
        m = pr.build_limit(space, q, args.stages, factors, depth=args.depth)
    except WouldViolateOak as exc:
        raise CliError(EXIT_BUILD, f"construction failed, condition ({exc.condition}): {exc}") from None
    except (PlacementFailed, ShrinkFailed, AssertionError, ValueError) as exc:
        raise CliError(EXIT_BUILD, f"construction failed: {exc}") from None
    problems = verify_limit(m, args.depth)
    if problems:
        raise CliError(EXIT_BUILD, "built map fails its checks: " + "; ".join(problems))
    path = pr.save_limit(m, args.out, args.depth)
    print(path)
    return EXIT_OK


# -- certify / eval ----------------------------------------------------------------


def cmd_certify(args) -> int:
    m = _load(args.manifest)
    try:
        a, b = pr.Stream.parse(args.a), pr.Stream.parse(args.b)
    except ValueError as exc:
        raise CliError(EXIT_BUILD, f"parse error: {exc}") from None
    for s in (a, b):
        if any(i < 0 or i >= len(m.q) for i in s.head + s.tail):
            raise CliError(EXIT_BUILD, f"stream {s} indexes outside Q")
    try:
        cert = pr.separate(m, a, b)
    except pr.StreamsEqual as exc:
        raise CliError(EXIT_EQUAL, str(exc)) from None
    except pr.InsufficientStages as exc:
        raise CliError(EXIT_STAGES, f"{exc} (required stages: {exc.needed})") from None
    out = Path(args.out) if args.out else Path(args.manifest).parent / "certificate.json"
    pr.dump_json(cert.to_json(), out)
    print(f"gap {rat_str(cert.gap)}")
    print(out)
    return EXIT_OK


def cmd_eval(args) -> int:
    m = _load(args.manifest)
    try:
        if args.values:
            x = pr.Stream.parse(args.x, rat)
        else:
            x = m.values(pr.Stream.parse(args.x))
        delta = rat(args.delta)
    except (ValueError, IndexError, ZeroDivisionError) as exc:
        raise CliError(EXIT_BUILD, f"parse error: {exc}") from None
    try:
        enc = pr.evaluate(m, x, delta)
    except pr.InsufficientStages as exc:
        raise CliError(EXIT_STAGES, f"{exc} (required stages: {exc.needed})") from None
    print(f"box {box_str(enc.box)}")
    print(f"width {rat_str(enc.box.width())} stage {enc.stage} tail {rat_str(enc.tail_bound)}")
    return EXIT_OK


# -- collide -----------------------------------------------------------------------

PRESET_FUNCS = {
    "clamp-sum": TailBoundedFunc.clamp_sum,
    "single-clamp": TailBoundedFunc.single_clamp,
}


def load_func(source: str) -> TailBoundedFunc:
    if source in PRESET_FUNCS:
        return PRESET_FUNCS[source]()
    try:
        text = Path(source).read_text() if Path(source).is_file() else source
        return TailBoundedFunc.from_json(json.loads(text))
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(EXIT_BUILD, f"cannot read function {source!r}: {exc}") from None


def cmd_collide(args) -> int:
    F = load_func(args.func)
    try:
        delta = rat(args.delta)
        tr = find_collision(F, delta)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(EXIT_BUILD, str(exc)) from None
    except SearchStalled as exc:
        raise CliError(EXIT_BUILD, str(exc)) from None
    out = Path(args.out)
    pr.dump_json({"function": F.to_json(), "delta": rat_str(delta), **tr.to_json()}, out)
    print(f"difference {rat_str(tr.difference)} prefix length {len(tr.a_prefix)}")
    print(out)
    return EXIT_OK


# -- verify ------------------------------------------------------------------------


def verify_limit(m: pr.LimitMap, depth=None) -> list:
    """Re-check every recorded invariant; returns human-readable failures."""
    problems = []
    if m.oaks[0] != Oak.initial():
        problems.append("stage 1 oak is not the initial sprig")
    if fx.eval_exact(m.funcs[0], ()) != (1, 0):
        problems.append("f_1 is not the constant (1,0)")
    for n, oak in enumerate(m.oaks, start=1):
        for v in validate(oak):
            problems.append(f"oak {n}: {v}")
    for n, (s, t) in enumerate(zip(m.oaks, m.oaks[1:]), start=1):
        if not is_subtree(s, t):
            problems.append(f"oak {n} is not a subtree of oak {n + 1}")
    if problems:
        return problems
    for n in range(1, m.stages):
        problems += _verify_stage(m, n, depth)
    return problems


def _verify_stage(m: pr.LimitMap, n: int, depth) -> list:
    problems = []
    eps = Fraction(1, 2 ** n)
    before, after = m.oaks[n - 1], m.oaks[n]
    cover = m.covers[n - 1]
    records = m.lifts[n - 1].records
    points = m.stage_points(n)
    if [r.point for r in records] != points:
        return [f"transcript {n}: points differ from the enumeration of Q^{n}"]
    values = {}
    for a, r in zip(points, records):
        if fx.eval_exact(m.funcs[n - 1], a) != r.value:
            problems.append(f"transcript {n}: recorded value of {a} is not f_{n}")
        v = fx.eval_exact(m.funcs[n], a)
        cls = after.classify_point(v)
        if not cls.in_crown:
            problems.append(f"stage {n + 1}: value of {a} is not on the crown")
            continue
        values[a] = cls.node
        if r.acted:
            if r.norm_bound >= eps / 2 ** (r.index + 1):
                problems.append(f"transcript {n}: step {r.index} bound exceeds its budget")
            if after[r.sprig_index] != r.sprig:
                problems.append(f"transcript {n}: sprig {r.sprig_index} differs from the oak")
            if not cover.elements[r.cover_index].contains_open(a) or cover.elements[r.cover_index] != r.cover_box:
                problems.append(f"transcript {n}: cover element does not hold {a}")
    for leaf in range(len(before), len(after)):
        pre = [a for a, t in values.items() if t == leaf]
        if pre and not any(all(e.contains_open(a) for a in pre) for e in cover.elements):
            problems.append(f"stage {n + 1}: leaf {leaf} pre-image is not inside one cover element")
    if len(m.norm_bounds) >= n:
        bound = fx.sup_diff_bound(m.funcs[n - 1], m.funcs[n], m.domain(n), depth)
        if bound >= eps or bound != m.norm_bounds[n - 1]:
            problems.append(f"stage {n}: norm bound {bound} does not reproduce the recorded one or is not below {eps}")
    return problems


def cmd_verify(args) -> int:
    m = _load(args.manifest)
    depth = args.depth if args.depth is not None else pr.load_json(args.manifest).get("depth")
    problems = verify_limit(m, depth)
    if args.certificate:
        try:
            cert = pr.SeparationCertificate.from_json(pr.load_json(args.certificate))
        except (OSError, ValueError, KeyError) as exc:
            raise CliError(EXIT_BUILD, f"cannot load certificate {args.certificate}: {exc}") from None
        try:
            again = pr.separate(m, pr.Stream.parse(cert.a), pr.Stream.parse(cert.b))
        except (pr.StreamsEqual, pr.InsufficientStages, pr.CertificateBroken) as exc:
            problems.append(f"certificate: {exc}")
        else:
            if again != cert:
                problems.append("certificate: does not match the recomputed separation")
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        named = [p for p in problems if "(A)" in p or "(B)" in p]
        raise CliError(EXIT_VERIFY, (named or problems)[0])
    print(f"ok: {m.stages} stages verified")
    return EXIT_OK


# -- render ------------------------------------------------------------------------


def _num(x) -> str:
    return f"{float(x):.4f}"


class Canvas:
    """World box to pixels with the y axis pointing up."""

    def __init__(self, box: RatBox, size=480, pad=20, x0=0):
        (self.xlo, xhi), (self.ylo, yhi) = box
        span = max(xhi - self.xlo, yhi - self.ylo) or Fraction(1)
        self.scale = Fraction(size - 2 * pad) / span
        self.pad, self.x0 = pad, x0
        self.height = (yhi - self.ylo) * self.scale + 2 * pad

    def xy(self, p):
        x = (p[0] - self.xlo) * self.scale + self.pad + self.x0
        y = self.height - ((p[1] - self.ylo) * self.scale + self.pad)
        return _num(x), _num(y)


def _svg(width, height, body) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" height="{_num(height)}">\n'
        "<!-- coordinates are decimal approximations for display only -->\n"
    )
    return head + "\n".join(body) + "\n</svg>\n"


def render_oak(oak: Oak, zoom=None) -> str:
    """Stems, knots and hood triangles; ``zoom`` frames the hood of one node."""
    if zoom is not None and oak[zoom].hood.bbox() is not None:
        world = oak[zoom].hood.bbox()
        world = world.inflate(world.width() / 10)
    else:
        boxes = [s.hood.bbox() for s in oak.nodes if s.hood.bbox() is not None]
        boxes += [RatBox(((min(s.base.x, s.tip.x), max(s.base.x, s.tip.x)), (min(s.base.y, s.tip.y), max(s.base.y, s.tip.y)))) for s in oak.nodes]
        world = boxes[0]
        for b in boxes[1:]:
            world = world.hull(b)
        world = world.inflate(Fraction(1, 20))
    cv = Canvas(world)
    body = []
    for i, s in enumerate(oak.nodes):
        if s.hood.is_plane:
            continue
        pts = " ".join(",".join(cv.xy(v)) for v in s.hood.vertices)
        body.append(f'<polygon points="{pts}" fill="#4a90d9" fill-opacity="0.12" stroke="#4a90d9" stroke-width="0.5"/>')
    for s in oak.nodes:
        (x1, y1), (x2, y2) = cv.xy(s.base), cv.xy(s.tip)
        body.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="1.5"/>')
    for s in oak.nodes:
        x, y = cv.xy(s.base)
        body.append(f'<circle cx="{x}" cy="{y}" r="2.5" fill="#c0392b"/>')
    return _svg(cv.pad * 2 + (world[0][1] - world[0][0]) * cv.scale, cv.height, body)


def _arrow(cv, p, q) -> str:
    (x1, y1), (x2, y2) = cv.xy(p), cv.xy(q)
    return f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#c0392b" stroke-width="0.8" marker-end="url(#tip)"/>'


def render_bend(avoid=()) -> str:
    """Left panel: the horizontal clamp onto the triangle; right panel: the ray projection onto the cross."""
    choice = bend.choose_slopes(avoid)
    world = RatBox(((Fraction(-11, 10), Fraction(11, 10)), (Fraction(-1, 10), Fraction(11, 10))))
    panels = [Canvas(world, 400, 20, 0), Canvas(world, 400, 20, 400)]
    body = [
        '<defs><marker id="tip" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto">'
        '<path d="M0,0 L6,3 L0,6 z" fill="#c0392b"/></marker></defs>'
    ]
    grid = [Fraction(i, 8) for i in range(-8, 9)]
    ys = [Fraction(j, 8) for j in range(0, 9)]
    for k, cv in enumerate(panels):
        square = [(-1, 0), (1, 0), (1, 1), (-1, 1)]
        body.append('<polygon points="%s" fill="none" stroke="#888"/>' % " ".join(",".join(cv.xy(p)) for p in square))
        tri = [(-1, 0), (1, 0), (0, 1)]
        body.append('<polygon points="%s" fill="#4a90d9" fill-opacity="0.12" stroke="#4a90d9"/>' % " ".join(",".join(cv.xy(p)) for p in tri))
        (x1, y1), (x2, y2) = cv.xy((-1, 0)), cv.xy((1, 0))
        body.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="2"/>')
        (x1, y1), (x2, y2) = cv.xy((0, 0)), cv.xy((0, 1))
        body.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="2"/>')
    for x in grid[::2]:
        for y in ys[1:-1:2]:
            if abs(x) > 1 - y:
                c = min(abs(x), 1 - y)
                body.append(_arrow(panels[0], (x, y), (c if x > 0 else -c, y)))
    for x in grid[1:-1:2]:
        for y in ys[1:-1:2]:
            if abs(x) < 1 - y and x != 0:
                body.append(_arrow(panels[1], (x, y), bend.ray_exact(x, y, choice.slope_right, choice.slope_left)))
    for a in avoid:
        x, y = panels[1].xy(a)
        body.append(f'<circle cx="{x}" cy="{y}" r="3" fill="none" stroke="#27ae60"/>')
    return _svg(800, panels[0].height, body)


def parse_points(text: str) -> list:
    pts = []
    for chunk in text.replace(" ", "").split(";"):
        if chunk:
            x, y = chunk.split(",")
            pts.append((rat(x), rat(y)))
    return pts


def cmd_render(args) -> int:
    if args.bend is not None:
        try:
            avoid = [] if args.bend in ("", "default") else parse_points(args.bend)
            svg = render_bend(avoid)
        except (ValueError, ZeroDivisionError) as exc:
            raise CliError(EXIT_BUILD, f"bad avoid set: {exc}") from None
    else:
        if not args.manifest:
            raise CliError(EXIT_BUILD, "render needs --manifest or --bend")
        m = _load(args.manifest)
        if not 1 <= args.stage <= m.stages:
            raise CliError(EXIT_BUILD, f"stage {args.stage} is not built (have {m.stages})")
        oak = m.oaks[args.stage - 1]
        if args.zoom is not None and not 0 <= args.zoom < len(oak):
            raise CliError(EXIT_BUILD, f"node {args.zoom} is not in the stage {args.stage} oak")
        svg = render_oak(oak, args.zoom)
    Path(args.out).write_text(svg)
    print(args.out)
    return EXIT_OK


# -- entry point -------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oaklift", description="Oak-based embeddings of countable products into the plane.")
    ap.add_argument("--depth", type=int, default=None, help="subdivision depth for norm bounds (default: $OAKLIFT_DEPTH or 4)")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a limit map and write its artifacts")
    b.add_argument("--space", default="[0,1]")
    b.add_argument("--q", default="1/2,1/3,2/3", help="comma-separated rationals, in enumeration order")
    b.add_argument("--factor", action="append", help="SPACE:Q for one factor; repeat for heterogeneous products")
    b.add_argument("--stages", type=int, default=3)
    b.add_argument("--from", dest="from_manifest", help="rebuild with the parameters recorded in a manifest")
    b.add_argument("--out", required=True)
    b.set_defaults(handler=cmd_build)

    c = sub.add_parser("certify", help="certify that two Q-streams have distinct images")
    c.add_argument("--manifest", required=True)
    c.add_argument("--a", required=True, help='index stream such as "0,1,(2)"')
    c.add_argument("--b", required=True)
    c.add_argument("--out")
    c.set_defaults(handler=cmd_certify)

    e = sub.add_parser("eval", help="enclose f(x) in a box of width at most 2*delta")
    e.add_argument("--manifest", required=True)
    e.add_argument("--x", required=True, help="index stream, or rational stream with --values")
    e.add_argument("--values", action="store_true", help="read --x as rational coordinates")
    e.add_argument("--delta", required=True)
    e.set_defaults(handler=cmd_eval)

    k = sub.add_parser("collide", help="find a near-collision of a real-valued map")
    k.add_argument("--func", default="clamp-sum", help="clamp-sum, single-clamp, or JSON text/file")
    k.add_argument("--delta", required=True)
    k.add_argument("--out", default="collision.json")
    k.set_defaults(handler=cmd_collide)

    r = sub.add_parser("render", help="draw an oak or the bend map as SVG")
    r.add_argument("--manifest")
    r.add_argument("--stage", type=int, default=1)
    r.add_argument("--zoom", type=int, help="frame the hood of this node")
    r.add_argument("--bend", nargs="?", const="default", help='avoid set "x,y;x,y" or "default"')
    r.add_argument("--out", required=True)
    r.set_defaults(handler=cmd_render)

    v = sub.add_parser("verify", help="re-check a built map from its files")
    v.add_argument("--manifest", required=True)
    v.add_argument("--certificate")
    v.set_defaults(handler=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
