"""Corner chops, wall chops and their inverses on marked polygons.

Corner chops remove a unimodular simplex at a Delzant corner and model
toric type blowups.  Wall chops bend the top boundary next to a vertical
wall and insert a new marked point; they model semitoric type blowups.
All arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from .lattice import LatticeError, RatPoint2, VertexKind, point, primitive_direction, sl2z_length, to_rational
from .polygon import (
    Mark,
    MarkedWeightedPolygon,
    ValidityError,
    _clean_cycle,
    act_eps,
    act_tau,
    classify,
    is_convex_ccw,
    piecewise_shear,
    reflect,
    vertical_walls,
)


class SurgeryError(LatticeError):
    pass


class InfeasibleChop(SurgeryError):
    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


class InfeasibleUnchop(SurgeryError):
    pass


class SizeOutOfRange(SurgeryError):
    pass


class MarkNotInterior(SurgeryError):
    pass


class NoWall(SurgeryError):
    pass


class NoMarks(SurgeryError):
    pass


@dataclass(frozen=True)
class ChopRequest:
    vertex: RatPoint2
    size: Fraction


# --- corner chops ----------------------------------------------------------

def _vertex_index(P: MarkedWeightedPolygon, q) -> int:
    q = RatPoint2(Fraction(q[0]), Fraction(q[1]))
    try:
        return P.vertices.index(q)
    except ValueError:
        raise InfeasibleChop("HitsVertex", f"{q} is not a vertex") from None


def _ray_meets_triangle(tri, mark: Mark) -> bool:
    xs = [p.x for p in tri]
    cx = mark.point.x
    if not (min(xs) <= cx <= max(xs)):
        return False
    ys = []
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        if a.x == b.x:
            if a.x == cx:
                ys += [a.y, b.y]
        elif min(a.x, b.x) <= cx <= max(a.x, b.x):
            ys.append(a.y + (b.y - a.y) * (cx - a.x) / (b.x - a.x))
    lo, hi = min(ys), max(ys)
    if mark.eps > 0:
        return hi >= mark.point.y
    return lo <= mark.point.y


def corner_chop(P: MarkedWeightedPolygon, r: ChopRequest) -> MarkedWeightedPolygon:
    """Remove the simplex ``Simp_q(lam u1, lam u2)`` at the Delzant corner q."""
    lam = to_rational(r.size)
    if lam <= 0:
        raise InfeasibleChop("TooLarge", "size must be positive")
    i = _vertex_index(P, r.vertex)
    reports = classify(P)
    if reports[i].kind != VertexKind.DELZANT:
        raise InfeasibleChop("NotDelzant", f"{reports[i].vertex} is {reports[i].kind.value}")
    n = len(P.vertices)
    q, prev_, nxt = P.vertices[i], P.vertices[i - 1], P.vertices[(i + 1) % n]
    u_prev = primitive_direction(q, prev_)
    u_next = primitive_direction(q, nxt)
    for other in (prev_, nxt):
        length = sl2z_length(q, other)
        if lam > length:
            raise InfeasibleChop("TooLarge", f"edge {q}-{other} has lattice length {length}")
        if lam == length:
            raise InfeasibleChop("HitsVertex", f"simplex reaches the vertex {other}")
    a = RatPoint2(q.x + lam * u_prev.x, q.y + lam * u_prev.y)
    b = RatPoint2(q.x + lam * u_next.x, q.y + lam * u_next.y)
    tri = (q, a, b)
    for m in P.marked:
        if _ray_meets_triangle(tri, m):
            raise InfeasibleChop("HitsCut", f"the cut of {m.point} meets the simplex")
    # other vertices strictly inside the simplex cannot occur for a convex polygon
    verts = list(P.vertices[:i]) + [a, b] + list(P.vertices[i + 1:])
    return MarkedWeightedPolygon(tuple(verts), P.marked)


def find_chop_representative(P: MarkedWeightedPolygon, r: ChopRequest):
    """Search the G_s orbit for a representative on which the chop is feasible.

    Returns ``(pattern, chopped)``.  The vertex is transported with the
    same piecewise shear as the polygon.
    """
    last: Optional[Exception] = None
    for pattern in product((1, -1), repeat=P.s):
        try:
            Q = act_eps(P, pattern)
        except ValidityError as exc:
            last = exc
            continue
        terms = [((m.eps - m.eps * e) // 2, m.point.x) for m, e in zip(P.marked, pattern)]
        q = piecewise_shear([RatPoint2(Fraction(r.vertex[0]), Fraction(r.vertex[1]))], terms)[0]
        try:
            return pattern, corner_chop(Q, ChopRequest(q, r.size))
        except (SurgeryError, ValidityError) as exc:
            last = exc
    raise InfeasibleChop("NoRepresentative", str(last))


def _line_intersection(p1, d1, p2, d2) -> RatPoint2:
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den == 0:
        raise InfeasibleUnchop("adjacent edges are parallel")
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / Fraction(den)
    return RatPoint2(p1[0] + t * d1[0], p1[1] + t * d1[1])


def corner_unchop(P: MarkedWeightedPolygon, edge) -> MarkedWeightedPolygon:
    """Collapse an edge into the intersection point of its two neighbours."""
    a = point(*edge[0]) if not isinstance(edge[0], RatPoint2) else edge[0]
    b = point(*edge[1]) if not isinstance(edge[1], RatPoint2) else edge[1]
    verts = list(P.vertices)
    n = len(verts)
    try:
        ia, ib = verts.index(a), verts.index(b)
    except ValueError:
        raise InfeasibleUnchop(f"{a}-{b} is not an edge") from None
    if (ia + 1) % n == ib:
        i = ia
    elif (ib + 1) % n == ia:
        i = ib
    else:
        raise InfeasibleUnchop(f"{a}-{b} is not an edge")
    s, e = verts[i], verts[(i + 1) % n]
    before, after = verts[i - 1], verts[(i + 2) % n]
    q = _line_intersection(s, (s.x - before.x, s.y - before.y), e, (after.x - e.x, after.y - e.y))
    # q takes the place of the edge's two endpoints
    if i + 1 < n:
        new = verts[:i] + [q] + verts[i + 2:]
    else:
        new = [q] + verts[1:n - 1]
    cleaned = _clean_cycle(new)
    if not is_convex_ccw(cleaned):
        raise InfeasibleUnchop("unchopped polygon is not convex")
    Q = MarkedWeightedPolygon(tuple(cleaned), P.marked)
    for m in Q.marked:
        if not Q.contains_interior(m.point):
            raise InfeasibleUnchop(f"marked point {m.point} leaves the interior")
    try:
        back = corner_chop(Q, ChopRequest(q, sl2z_length(s, e)))
    except (SurgeryError, ValidityError) as exc:
        raise InfeasibleUnchop(f"the chop at {q} does not recover the polygon ({exc})") from exc
    if back != P:
        raise InfeasibleUnchop("the chop at the unchopped corner does not recover the polygon")
    return Q


# --- wall chops ---------------------------------------------------------------

def chains(P: MarkedWeightedPolygon):
    """Bottom and top boundary chains, both ordered by increasing x."""
    verts = P.vertices  # starts at the lexicographic minimum, CCW
    n = len(verts)
    imax = max(range(n), key=lambda k: (verts[k].x, verts[k].y))
    lower = list(verts[: imax + 1])
    upper = [verts[0]] + list(reversed(verts[imax:]))
    # move vertical wall points: the lower chain ends at the lowest point of the right wall
    while len(lower) > 1 and lower[-1].x == lower[-2].x:
        lower.pop()
    xmin = verts[0].x
    upper_pts = [p for p in upper]
    # the upper chain starts at the highest point of the left wall
    while len(upper_pts) > 1 and upper_pts[1].x == xmin:
        upper_pts.pop(0)
    if upper_pts[-1] != verts[imax]:
        upper_pts.append(verts[imax])
    return lower, upper_pts


def _chain_map(chain, phi_terms, side):
    """Add ``sum(u * phi_mu(x))`` to a chain, inserting breakpoints at each mu.

    ``phi_mu(x) = min(0, x - mu)`` on the left side and ``min(0, mu - x)``
    on the right side.
    """
    pts = list(chain)
    for _, mu in phi_terms:
        out = []
        for a, b in zip(pts, pts[1:]):
            out.append(a)
            if (a.x - mu) * (b.x - mu) < 0:
                out.append(RatPoint2(mu, a.y + (b.y - a.y) * (mu - a.x) / (b.x - a.x)))
        out.append(pts[-1])
        pts = out
    res = []
    for p in pts:
        dy = Fraction(0)
        for u, mu in phi_terms:
            if side == "left" and p.x < mu:
                dy += u * (p.x - mu)
            elif side == "right" and p.x > mu:
                dy += u * (mu - p.x)
        res.append(RatPoint2(p.x, p.y + dy))
    return res


def _assemble(lower, upper) -> list[RatPoint2]:
    return _clean_cycle(list(lower) + list(reversed(upper)))


def _bend_polygon(P, top_terms, bottom_terms, side) -> list[RatPoint2]:
    lower, upper = chains(P)
    if bottom_terms:
        lower = _chain_map(lower, bottom_terms, side)
    if top_terms:
        upper = _chain_map(upper, top_terms, side)
    for p_lo, p_hi in ((lower[0], upper[0]), (lower[-1], upper[-1])):
        if p_lo.y > p_hi.y:
            raise SurgeryError("bent boundaries cross")
    pts = _assemble(lower, upper)
    if not is_convex_ccw(pts):
        raise SurgeryError("bent polygon is not convex")
    return pts


def _wall(P: MarkedWeightedPolygon, side: str):
    side = side.lower()
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    walls = vertical_walls(P)
    if side not in walls:
        raise NoWall(f"no vertical wall on the {side}")
    return side, walls[side]


def _apply_heights(Q_verts, marks, reheights):
    Q = MarkedWeightedPolygon(tuple(Q_verts), ())
    out = []
    reheights = list(reheights or [])
    reheights += [None] * (len(marks) - len(reheights))
    for m, h in zip(marks, reheights):
        p = m.point if h is None else RatPoint2(m.point.x, to_rational(h))
        if not Q.contains_interior(p):
            raise MarkNotInterior(f"marked point {p} is not interior to the new polygon")
        out.append(Mark(p, m.eps))
    return out


def wall_chop(P: MarkedWeightedPolygon, side: str, size, new_height, reheights: Sequence = ()) -> MarkedWeightedPolygon:
    """Wall chop of the given size next to the left or right vertical wall.

    ``reheights`` lists new y-coordinates for the existing marks in their
    current order; ``None`` keeps a mark where it is.
    """
    side, (lo, hi) = _wall(P, side)
    lam = to_rational(size)
    width = P.xmax() - P.xmin()
    if not (0 < lam < min(hi.y - lo.y, width)):
        raise SizeOutOfRange(f"size {lam} not in (0, {min(hi.y - lo.y, width)})")
    mu = lo.x + lam if side == "left" else lo.x - lam
    verts = _bend_polygon(P, [(1, mu)], [], side)
    marks = _apply_heights(verts, P.marked, reheights)
    new = Mark(RatPoint2(mu, to_rational(new_height)), 1)
    marks = _apply_heights(verts, [new], [None]) + marks
    return MarkedWeightedPolygon(tuple(verts), tuple(marks))


def wall_unchop(P: MarkedWeightedPolygon, side: str, mark_index: int, preferred: bool = True,
                reheights: Optional[Sequence] = None) -> MarkedWeightedPolygon:
    """Remove the mark ``mark_index`` (0-based, lexicographic) by a wall unchop.

    With ``preferred`` the remaining marks keep their heights; otherwise
    ``reheights`` supplies their new heights in order.
    """
    side, _ = _wall(P, side)
    if P.s == 0:
        raise NoMarks("polygon has no marked points")
    if not 0 <= mark_index < P.s:
        raise IndexError(f"mark index {mark_index} out of range")
    b = P.marked[mark_index]
    mu = b.point.x
    try:
        if b.eps > 0:
            verts = _bend_polygon(P, [(-1, mu)], [], side)
        else:
            verts = _bend_polygon(P, [], [(1, mu)], side)
    except SurgeryError as exc:
        raise InfeasibleUnchop(str(exc)) from exc
    rest = [m for j, m in enumerate(P.marked) if j != mark_index]
    heights = None if preferred else reheights
    marks = _apply_heights(verts, rest, heights)
    return MarkedWeightedPolygon(tuple(verts), tuple(marks))


def complete_wall_unchop(P: MarkedWeightedPolygon, side: str, order: Optional[Sequence[int]] = None) -> MarkedWeightedPolygon:
    """Unchop every mark; the result does not depend on the order.

    Intermediate marks are not required to stay interior, since only the
    final mark-free polygon is returned.
    """
    side, _ = _wall(P, side)
    order = list(range(P.s)) if order is None else list(order)
    if sorted(order) != list(range(P.s)):
        raise ValueError("order must be a permutation of the mark indices")
    lower, upper = chains(P)
    for j in order:
        m = P.marked[j]
        if m.eps > 0:
            upper = _chain_map(upper, [(-1, m.point.x)], side)
        else:
            lower = _chain_map(lower, [(1, m.point.x)], side)
        pts = _assemble(lower, upper)
        if not is_convex_ccw(pts):
            raise InfeasibleUnchop("intermediate polygon is not convex")
    return MarkedWeightedPolygon(tuple(_assemble(lower, upper)), ())


# --- scripts ----------------------------------------------------------------

def _parse_point(tok: str) -> RatPoint2:
    x, y = tok.split(",")
    return point(x, y)


def parse_script(text: str):
    """Parse the line-oriented surgery script format.

    Commands (one per line, ``#`` starts a comment)::

        start <x,y> ... [marks <x,y,eps> ...]
        chop <x,y> <size>
        unchop <x,y> <x,y>
        wallchop <left|right> <size> <height> [<reheight|keep> ...]
        wallunchop <left|right> <index> [preferred | <reheight|keep> ...]
        complete <left|right>
        act tau <k> <y>
        act eps <+1|-1> ...
        reflect <J|H>
        expect <x,y> ...
    """
    cmds = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        cmds.append((lineno, toks[0].lower(), toks[1:]))
    return cmds


class ScriptError(SurgeryError):
    pass


def _heights(toks):
    return [None if t == "keep" else to_rational(t) for t in toks]


def run_script(text: str, start: Optional[MarkedWeightedPolygon] = None):
    """Replay a surgery script; returns the list of (command, polygon) steps.

    ``expect`` lines compare the current vertex cycle exactly and raise
    :class:`ScriptError` on mismatch.
    """
    P = start
    steps = []
    for lineno, cmd, args in parse_script(text):
        try:
            if cmd == "start":
                if "marks" in args:
                    k = args.index("marks")
                    vtoks, mtoks = args[:k], args[k + 1:]
                else:
                    vtoks, mtoks = args, []
                marks = []
                for t in mtoks:
                    x, y, e = t.split(",")
                    marks.append(Mark(point(x, y), int(e)))
                P = MarkedWeightedPolygon(tuple(_parse_point(t) for t in vtoks), tuple(marks))
            elif P is None:
                raise ScriptError("script must begin with 'start'")
            elif cmd == "chop":
                P = corner_chop(P, ChopRequest(_parse_point(args[0]), to_rational(args[1])))
            elif cmd == "unchop":
                P = corner_unchop(P, (_parse_point(args[0]), _parse_point(args[1])))
            elif cmd == "wallchop":
                P = wall_chop(P, args[0], to_rational(args[1]), to_rational(args[2]), _heights(args[3:]))
            elif cmd == "wallunchop":
                rest = args[2:]
                if not rest or rest == ["preferred"]:
                    P = wall_unchop(P, args[0], int(args[1]), preferred=True)
                else:
                    P = wall_unchop(P, args[0], int(args[1]), preferred=False, reheights=_heights(rest))
            elif cmd == "complete":
                P = complete_wall_unchop(P, args[0])
            elif cmd == "act":
                if args[0] == "tau":
                    P = act_tau(P, int(args[1]), to_rational(args[2]))
                elif args[0] == "eps":
                    P = act_eps(P, [int(a) for a in args[1:]])
                else:
                    raise ScriptError(f"unknown action {args[0]!r}")
            elif cmd == "reflect":
                P = reflect(P, args[0])
            elif cmd == "expect":
                want = MarkedWeightedPolygon(tuple(_parse_point(t) for t in args), ())
                if want.vertices != P.vertices:
                    raise ScriptError(f"expected {fmt_vertices(want)}, got {fmt_vertices(P)}")
                continue
            else:
                raise ScriptError(f"unknown command {cmd!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, LatticeError):
                raise
            raise ScriptError(f"line {lineno}: malformed '{cmd}' command ({exc})") from exc
        except LatticeError as exc:
            exc.args = (f"line {lineno}: {exc}",)
            raise
        steps.append((cmd, P))
    return steps


def fmt_vertices(P: MarkedWeightedPolygon) -> str:
    from .lattice import format_rational as f
    return " ".join(f"{f(v.x)},{f(v.y)}" for v in P.vertices)
