"""Command-line entry point: ``semitoric <group> <command> [options]``.

Exit status is 0 on success, 1 on a domain error (invalid polygon,
infeasible surgery, parameters outside a theorem's window, ...) and 2 on
a usage error.  Errors are written to standard error as one JSON record
``{"error": <kind>, "message": <text>}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import helix as hx
from . import polygon as pg
from . import reduced as rd
from . import s1space, surgery
from .lattice import LatticeError, format_rational, to_rational


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- argument types ------------------------------------------------------------

def exact(text: str) -> Fraction:
    try:
        return to_rational(text)
    except (LatticeError, ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"expected an exact rational p or p/q, got {text!r}") from exc


def real(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"expected a number (decimal or p/q), got {text!r}") from exc


def exact_point(text: str):
    try:
        x, y = text.split(",")
        return pg.point(x, y)
    except (LatticeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"expected an exact point x,y, got {text!r}") from exc


def height_arg(text: str):
    return None if text == "keep" else exact(text)


# --- I/O helpers -----------------------------------------------------------------

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_polygon(path: str) -> pg.MarkedWeightedPolygon:
    return pg.loads(_read(path))


def _load_helix(path: str) -> hx.SemitoricHelix:
    obj = json.loads(_read(path))
    if "vertices" in obj:
        return hx.helix_from_polygon(pg.from_json(obj))
    h = hx.SemitoricHelix(int(obj["d"]), int(obj["s"]), tuple(tuple(v) for v in obj["v"]))
    h.check()
    return h


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, Fraction):
        return format_rational(o)
    if hasattr(o, "to_json"):
        return o.to_json()
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _rational_guess(x: float) -> str | None:
    q = Fraction(x).limit_denominator(10_000)
    return format_rational(q) if abs(float(q) - x) < 1e-12 else None


# --- polygon -------------------------------------------------------------------------

def cmd_polygon(args):
    P = _load_polygon(args.file)
    if args.command == "validate":
        reports = pg.classify(P)
        ok = pg.is_valid(P)
        out = {"valid": ok, "corners": [
            {"vertex": [format_rational(r.vertex.x), format_rational(r.vertex.y)], "kind": r.kind.value,
             "cuts": r.cut_multiplicity} for r in reports]}
        return _dump(out), 0 if ok else 1
    if args.command == "canon":
        pg.classify(P)
        return pg.dumps(pg.canonical_form(P)), 0
    if args.command == "act":
        if args.tau is not None:
            return pg.dumps(pg.act_tau(P, args.tau, args.y)), 0
        if args.eps is None:
            raise UsageError("polygon act needs --tau or --eps")
        return pg.dumps(pg.act_eps(P, [int(e) for e in args.eps.split(",")])), 0
    if args.command == "reflect":
        return pg.dumps(pg.reflect(P, args.axis)), 0
    if args.command == "equal":
        return _dump({"equal": pg.orbits_equal(P, _load_polygon(args.other))}), 0
    raise UsageError(args.command)


# --- surgery ----------------------------------------------------------------------

def cmd_surgery(args):
    if args.command == "script":
        start = _load_polygon(args.start) if args.start else None
        steps = surgery.run_script(_read(args.file), start)
        out = {"steps": [{"command": c, "polygon": pg.to_json(P)} for c, P in steps],
               "final": pg.to_json(steps[-1][1]) if steps else None}
        return _dump(out), 0
    P = _load_polygon(args.file)
    if args.command == "chop":
        Q = surgery.corner_chop(P, surgery.ChopRequest(args.at, args.size))
    elif args.command == "unchop":
        Q = surgery.corner_unchop(P, tuple(args.edge))
    elif args.command == "wallchop":
        Q = surgery.wall_chop(P, args.side, args.size, args.height, args.reheight or ())
    elif args.command == "wallunchop":
        if args.reheight:
            Q = surgery.wall_unchop(P, args.side, args.mark, preferred=False, reheights=args.reheight)
        else:
            Q = surgery.wall_unchop(P, args.side, args.mark)
    elif args.command == "complete":
        Q = surgery.complete_wall_unchop(P, args.side)
    else:
        raise UsageError(args.command)
    return pg.dumps(Q), 0


# --- helix -------------------------------------------------------------------------

def cmd_helix(args):
    if args.command == "build":
        P = hx.build_minimal_polygon(args.type, alpha=args.alpha, beta=args.beta, n=args.n,
                                     h=args.h, h1=args.h1, h2=args.h2)
        return pg.dumps(P), 0
    if args.command == "from-polygon":
        return _dump(hx.helix_from_polygon(_load_polygon(args.file)).to_json()), 0
    h = _load_helix(args.file)
    if args.command == "classify":
        return _dump(hx.classify_type(h).to_json()), 0
    if args.command == "minimal":
        return _dump({"minimal": hx.is_minimal(h), "witnesses": hx.corner_witnesses(h)}), 0
    if args.command == "strict":
        return _dump({"strictly_minimal": hx.strictly_minimal(h), "minimal": hx.is_minimal(h),
                      "horizontal": hx.has_horizontal(h)}), 0
    if args.command == "blowdown":
        if args.index is None:
            out = hx.complete_blowdown(h)
            return _dump({"helix": out.to_json(), "toric_model": hx.minimal_toric_model(h)}), 0
        return _dump(hx.helix_blowdown(h, args.index).to_json()), 0
    raise UsageError(args.command)


# --- karshon -----------------------------------------------------------------------

def cmd_karshon(args):
    P = _load_polygon(args.file)
    if args.command == "graph":
        g = s1space.graph_from_polygon(P)
        if args.text:
            return g.render_text(), 0
        return _dump(g.to_json()), 0
    if args.command == "obstruct":
        r = s1space.transition_obstructions(P, args.mark)
        out = r.to_json()
        out["orbit_invariant"] = s1space.obstruction_orbit_invariant(P, args.mark)
        return _dump(out), 0
    raise UsageError(args.command)


# --- system ------------------------------------------------------------------------

def _family(args) -> rd.ReducedFamily:
    base = rd.BUILTINS[args.family]()
    pick = lambda name: getattr(args, name) if getattr(args, name) is not None else getattr(base, name)
    t = args.t if args.t is not None else base.t
    if args.family == "cp2":
        return rd.CP2Family(t=t, permissive=args.permissive, alpha=pick("alpha"), gamma=pick("gamma"),
                            delta=pick("delta"))
    alpha = 0.0 if args.family == "3b" else pick("alpha")
    return rd.Type3Family(t=t, permissive=args.permissive, kind=args.family, alpha=alpha, beta=pick("beta"),
                          n=pick("n"), gamma=pick("gamma"), delta=pick("delta"))


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().rstrip("\n")


def cmd_system(args):
    F = _family(args)
    fmt = args.format
    if args.command == "times":
        tm, tp = rd.transition_times(F)
        out = {"t_minus": tm, "t_plus": tp, "t_minus_exact": _rational_guess(tm), "t_plus_exact": _rational_guess(tp)}
        if fmt == "csv":
            return _rows_csv(["t_minus", "t_plus"], [[repr(tm), repr(tp)]]), 0
        return _dump(out), 0
    if args.command == "critical":
        pts = rd.critical_points(F, args.j)
        if fmt == "csv":
            return _rows_csv(["j", "X", "eps", "theta", "kind", "value"],
                             [[repr(p.j), repr(p.X), p.eps, repr(p.theta), p.kind, repr(p.value)] for p in pts]), 0
        return _dump([p.to_json() for p in pts]), 0
    if args.command == "parabolic":
        reps = rd.parabolic_scan(F)
        if fmt == "csv":
            return _rows_csv(["j", "X", "eps", "c1", "c2", "c3", "c4", "verdict", "value"],
                             [[repr(r.j), repr(r.X), r.eps, *r.conditions, r.verdict, repr(r.value)] for r in reps]), 0
        return _dump([r.to_json() for r in reps]), 0
    if args.command == "flap":
        tr = rd.flap_trace(F, args.flap_t, samples=args.samples)
        if fmt == "csv":
            return _rows_csv(["j", "xi1", "xi2"], [[repr(j), repr(a), repr(b)] for j, a, b in zip(tr.js, tr.xi1, tr.xi2)]), 0
        out = {"t": tr.t, "x1": tr.x1, "j_t": tr.j_t, "j_t_root": tr.j_t_root, "j_1": tr.j_1,
               "x1_within_bound": tr.x1 <= tr.j_t, "parabolic": [r.to_json() for r in tr.reports],
               "samples": [{"j": j, "xi1": a, "xi2": b} for j, a, b in zip(tr.js, tr.xi1, tr.xi2)]}
        return _dump(out), 0
    if args.command == "height":
        h = rd.height_invariant(F)
        return (_rows_csv(["h"], [[repr(h)]]) if fmt == "csv" else _dump({"h": h})), 0
    if args.command == "image":
        img = rd.sample_image(F, args.j_cells)
        if fmt == "csv":
            return rd.image_to_csv(img).rstrip("\n"), 0
        if fmt == "svg":
            return rd.image_to_svg(img).rstrip("\n"), 0
        return _dump({"family": img.family, "params": img.params, "fixed_points": img.fixed_points,
                      "rows": [{"j": r.j, "H_min": r.H_min, "H_max": r.H_max,
                                "critical": [p.to_json() for p in r.critical]} for r in img.rows]}), 0
    if args.command == "spherecheck":
        m = rd.boundary_sphere_check(F, args.samples, seed=args.seed, z3_zero=args.z3_zero)
        return _dump({"min_gap": m, "samples": args.samples, "seed": args.seed, "ok": m >= -1e-12}), 0
    raise UsageError(args.command)


# --- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semitoric", description=__doc__.splitlines()[0])
    p.add_argument("-o", "--output", help="write the result to this file instead of standard output")
    p.add_argument("--format", choices=("json", "csv", "svg"), default="json")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)
    # leaf commands accept the output options too, so they may follow the command name
    common = _Parser(add_help=False)
    common.add_argument("-o", "--output", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("json", "csv", "svg"), default=argparse.SUPPRESS)

    def leaf(sub, name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    g = groups.add_parser("polygon", help="marked polygons").add_subparsers(dest="command", required=True)
    for name in ("validate", "canon"):
        leaf(g, name).add_argument("file")
    c = leaf(g, "act")
    c.add_argument("file")
    c.add_argument("--tau", type=int, help="shear power k of T^k")
    c.add_argument("--y", type=exact, default=Fraction(0), help="vertical translation")
    c.add_argument("--eps", help="comma-separated signs, one per mark")
    c = leaf(g, "reflect")
    c.add_argument("file")
    c.add_argument("--axis", choices=("J", "H"), required=True)
    c = leaf(g, "equal")
    c.add_argument("file")
    c.add_argument("other")

    g = groups.add_parser("surgery", help="corner and wall chops").add_subparsers(dest="command", required=True)
    c = leaf(g, "chop")
    c.add_argument("file")
    c.add_argument("--at", type=exact_point, required=True)
    c.add_argument("--size", type=exact, required=True)
    c = leaf(g, "unchop")
    c.add_argument("file")
    c.add_argument("--edge", type=exact_point, nargs=2, required=True)
    c = leaf(g, "wallchop")
    c.add_argument("file")
    c.add_argument("--side", choices=("left", "right"), required=True)
    c.add_argument("--size", type=exact, required=True)
    c.add_argument("--height", type=exact, required=True)
    c.add_argument("--reheight", type=height_arg, nargs="*")
    c = leaf(g, "wallunchop")
    c.add_argument("file")
    c.add_argument("--side", choices=("left", "right"), required=True)
    c.add_argument("--mark", type=int, required=True)
    c.add_argument("--reheight", type=height_arg, nargs="*")
    c = leaf(g, "complete")
    c.add_argument("file")
    c.add_argument("--side", choices=("left", "right"), required=True)
    c = leaf(g, "script")
    c.add_argument("file")
    c.add_argument("--start", help="polygon JSON to start from when the script has no 'start' line")

    g = groups.add_parser("helix", help="semitoric helices").add_subparsers(dest="command", required=True)
    leaf(g, "from-polygon").add_argument("file")
    for name in ("classify", "minimal", "strict"):
        leaf(g, name, help="takes helix JSON or polygon JSON").add_argument("file")
    c = leaf(g, "blowdown")
    c.add_argument("file")
    c.add_argument("--index", type=int, help="blow down at this horizontal vector (default: complete blowdown)")
    c = leaf(g, "build")
    c.add_argument("--type", required=True, choices=("1", "2a", "2b", "3a", "3b", "3c"))
    for name in ("alpha", "beta", "h", "h1", "h2"):
        c.add_argument(f"--{name}", type=exact)
    c.add_argument("--n", type=int)

    g = groups.add_parser("karshon", help="Karshon graphs and obstructions").add_subparsers(dest="command", required=True)
    c = leaf(g, "graph")
    c.add_argument("file")
    c.add_argument("--text", action="store_true", help="plain-text rendering")
    c = leaf(g, "obstruct")
    c.add_argument("file")
    c.add_argument("--mark", type=int, required=True)

    g = groups.add_parser("system", help="reduced-Hamiltonian numerics").add_subparsers(dest="command", required=True)
    for name in ("times", "critical", "parabolic", "flap", "height", "image", "spherecheck"):
        c = leaf(g, name)
        c.add_argument("--family", choices=tuple(rd.BUILTINS), required=True)
        for param in ("alpha", "beta", "gamma", "delta"):
            c.add_argument(f"--{param}", type=real)
        c.add_argument("--n", type=int)
        c.add_argument("--permissive", action="store_true", help="skip the theorem parameter bounds")
        if name == "flap":
            c.add_argument("--t", dest="flap_t", type=real, required=True)
            c.add_argument("--samples", type=int, default=40)
            c.set_defaults(t=None)
        else:
            c.add_argument("--t", type=real)
        if name == "critical":
            c.add_argument("--j", type=real, required=True)
        if name == "image":
            c.add_argument("--j-cells", type=int, default=64)
        if name == "spherecheck":
            c.add_argument("--samples", type=int, default=10_000)
            c.add_argument("--seed", type=int, default=0)
            c.add_argument("--z3-zero", action="store_true")
    return p


HANDLERS = {"polygon": cmd_polygon, "surgery": cmd_surgery, "helix": cmd_helix,
            "karshon": cmd_karshon, "system": cmd_system}

DOMAIN_ERRORS = (LatticeError, rd.ReducedError, IndexError, json.JSONDecodeError)


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.format == "svg" and not (args.group == "system" and args.command == "image"):
            raise UsageError("--format svg is only available for 'system image'")
        if args.format == "csv" and args.group != "system":
            raise UsageError("--format csv is only available for 'system' commands")
        text, code = HANDLERS[args.group](args)
    except UsageError as exc:
        _error("UsageError", str(exc))
        return 2
    except OSError as exc:
        _error(type(exc).__name__, str(exc))
        return 2
    except DOMAIN_ERRORS as exc:
        _error(type(exc).__name__, str(exc))
        return 1
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
