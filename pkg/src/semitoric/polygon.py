"""Marked weighted polygons and the group actions on them.

A polygon is stored as a tuple of exact vertices in counter-clockwise
order, starting at the lexicographically smallest vertex, together with
a lexicographically sorted tuple of marked points carrying a cut sign.

The piecewise shears ``t_lambda`` all have the form ``y -> y + phi(x)``
for a convex piecewise linear ``phi``, so they commute; we apply them by
adding breakpoints on the vertical lines ``x = lambda`` and mapping every
vertex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, NamedTuple, Sequence

from .lattice import (
    LatticeError,
    RatPoint2,
    VertexCondition,
    VertexKind,
    det2,
    format_rational,
    inward_normal,
    point,
    to_rational,
    vertex_condition,
)


class ValidityError(LatticeError):
    """The marked polygon is not a marked Delzant semitoric polygon."""

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where


class StructureError(ValidityError):
    pass


class CutHitsEdgeInterior(ValidityError):
    pass


class NonDelzantFreeVertex(ValidityError):
    pass


class WrongKAtCutVertex(ValidityError):
    pass


class LengthMismatch(LatticeError):
    pass


class Mark(NamedTuple):
    point: RatPoint2
    eps: int

    def sort_key(self):
        return (self.point.x, self.point.y, self.eps)


class VertexReport(NamedTuple):
    vertex: RatPoint2
    kind: VertexKind
    cut_multiplicity: int
    normals: tuple

    @property
    def condition(self) -> VertexCondition:
        return VertexCondition(self.kind, self.cut_multiplicity)


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _clean_cycle(points: Sequence[RatPoint2]) -> list[RatPoint2]:
    """Drop repeated and collinear vertices from a closed polygon."""
    pts = []
    for p in points:
        if not pts or pts[-1] != p:
            pts.append(p)
    while len(pts) > 1 and pts[0] == pts[-1]:
        pts.pop()
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        for i in range(len(pts)):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % len(pts)]
            if _cross(a, b, c) == 0 and _between(a, b, c):
                del pts[i]
                changed = True
                break
    return pts


def _between(a, b, c) -> bool:
    # b lies on the closed segment ac (collinearity assumed)
    return min(a[0], c[0]) <= b[0] <= max(a[0], c[0]) and min(a[1], c[1]) <= b[1] <= max(a[1], c[1])


def _rotate_lexmin(pts: list[RatPoint2]) -> tuple[RatPoint2, ...]:
    i = min(range(len(pts)), key=lambda k: (pts[k].x, pts[k].y))
    return tuple(pts[i:] + pts[:i])


def is_convex_ccw(pts: Sequence[RatPoint2]) -> bool:
    """Strict convexity test for a CCW vertex cycle."""
    n = len(pts)
    if n < 3:
        return False
    for i in range(n):
        if _cross(pts[i - 1], pts[i], pts[(i + 1) % n]) <= 0:
            return False
    # a strictly left-turning cycle could still wind twice
    return _signed_area2(pts) > 0 and _winding_ok(pts)


def _winding_ok(pts) -> bool:
    # the x-coordinate changes monotonic direction exactly twice on a convex cycle
    n = len(pts)
    signs = []
    for i in range(n):
        d = pts[(i + 1) % n].x - pts[i].x
        if d != 0:
            s = 1 if d > 0 else -1
            if not signs or signs[-1] != s:
                signs.append(s)
    if len(signs) > 1 and signs[0] == signs[-1]:
        signs.pop()
    return len(signs) <= 2


def _signed_area2(pts) -> Fraction:
    n = len(pts)
    return sum((pts[i].x * pts[(i + 1) % n].y - pts[(i + 1) % n].x * pts[i].y for i in range(n)), Fraction(0))


@dataclass(frozen=True)
class MarkedWeightedPolygon:
    vertices: tuple
    marked: tuple = ()

    def __post_init__(self):
        verts = [point(*v) if not isinstance(v, RatPoint2) else v for v in self.vertices]
        verts = _clean_cycle(verts)
        if len(verts) >= 3 and _signed_area2(verts) < 0:
            verts = verts[::-1]
        object.__setattr__(self, "vertices", _rotate_lexmin(verts) if verts else ())
        marks = []
        for m in self.marked:
            if isinstance(m, Mark):
                marks.append(m)
            else:
                p, e = m
                marks.append(Mark(p if isinstance(p, RatPoint2) else point(*p), int(e)))
        for m in marks:
            if m.eps not in (1, -1):
                raise StructureError(f"cut sign must be +1 or -1, got {m.eps}")
        object.__setattr__(self, "marked", tuple(sorted(marks, key=Mark.sort_key)))

    @property
    def s(self) -> int:
        return len(self.marked)

    @property
    def eps(self) -> tuple:
        return tuple(m.eps for m in self.marked)

    def xmin(self) -> Fraction:
        return min(v.x for v in self.vertices)

    def xmax(self) -> Fraction:
        return max(v.x for v in self.vertices)

    def edges(self):
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def vertical_extent(self, x) -> tuple[Fraction, Fraction]:
        """Lowest and highest y of the polygon on the vertical line through x."""
        x = Fraction(x)
        ys = []
        for a, b in self.edges():
            if a.x == b.x:
                if a.x == x:
                    ys += [a.y, b.y]
            elif min(a.x, b.x) <= x <= max(a.x, b.x):
                ys.append(a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x))
        if not ys:
            raise ValueError(f"x = {x} is outside the polygon")
        return min(ys), max(ys)

    def contains_interior(self, p) -> bool:
        n = len(self.vertices)
        return all(_cross(self.vertices[i], self.vertices[(i + 1) % n], p) > 0 for i in range(n))

    def cut_endpoint(self, mark: Mark) -> RatPoint2:
        lo, hi = self.vertical_extent(mark.point.x)
        return RatPoint2(mark.point.x, hi if mark.eps > 0 else lo)

    def check_structure(self) -> None:
        if not is_convex_ccw(self.vertices):
            raise StructureError("vertices do not form a strictly convex CCW polygon")
        for m in self.marked:
            if not self.contains_interior(m.point):
                raise StructureError(f"marked point {m.point} is not interior", m.point)

    def with_marks(self, marks) -> "MarkedWeightedPolygon":
        return MarkedWeightedPolygon(self.vertices, tuple(marks))


def polygon(vertices: Iterable, marks: Iterable = ()) -> MarkedWeightedPolygon:
    """Convenience constructor taking ``(x, y)`` pairs and ``((x, y), eps)`` marks."""
    return MarkedWeightedPolygon(tuple(point(*v) for v in vertices),
                                 tuple(Mark(point(*p), int(e)) for p, e in marks))


def cut_multiplicities(P: MarkedWeightedPolygon) -> dict:
    """Map each boundary point hit by a cut to the number of cuts through it."""
    counts: dict = {}
    for m in P.marked:
        q = P.cut_endpoint(m)
        counts[q] = counts.get(q, 0) + 1
    return counts


def vertex_normals(P: MarkedWeightedPolygon, i: int):
    """Inward normals (v1, v2) at vertex i, ordered so that det(v1, v2) > 0."""
    n = len(P.vertices)
    prev_, cur, nxt = P.vertices[i - 1], P.vertices[i], P.vertices[(i + 1) % n]
    v1 = inward_normal(prev_, cur)
    v2 = inward_normal(cur, nxt)
    assert det2(v1, v2) > 0
    return v1, v2


def classify(P: MarkedWeightedPolygon) -> list[VertexReport]:
    """Vertex-by-vertex validity report; raises a ValidityError on failure."""
    P.check_structure()
    counts = cut_multiplicities(P)
    vset = set(P.vertices)
    for q in counts:
        if q not in vset:
            raise CutHitsEdgeInterior(f"cut meets the boundary at {q}, which is not a vertex", q)
    reports = []
    for i, q in enumerate(P.vertices):
        v1, v2 = vertex_normals(P, i)
        k = counts.get(q, 0)
        cond = vertex_condition(v1, v2, k)
        if cond.kind == VertexKind.INVALID:
            if k == 0:
                raise NonDelzantFreeVertex(f"vertex {q} is not Delzant", q)
            raise WrongKAtCutVertex(f"vertex {q} is neither {k}-fake nor {k}-hidden", q)
        reports.append(VertexReport(q, cond.kind, k, (v1, v2)))
    return reports


def is_valid(P: MarkedWeightedPolygon) -> bool:
    try:
        classify(P)
    except ValidityError:
        return False
    return True


# --- group actions -------------------------------------------------------

def _tau_point(p, k, y):
    return RatPoint2(p.x, p.y + k * p.x + y)


def act_tau(P: MarkedWeightedPolygon, k: int, y=0) -> MarkedWeightedPolygon:
    """Apply ``(T^k, (0, y))`` with ``T(x, y) = (x, x + y)``."""
    y = to_rational(y)
    verts = tuple(_tau_point(v, k, y) for v in P.vertices)
    marks = tuple(Mark(_tau_point(m.point, k, y), m.eps) for m in P.marked)
    return MarkedWeightedPolygon(verts, marks)


def _split_at(verts: Sequence[RatPoint2], xs: Iterable[Fraction]) -> list[RatPoint2]:
    """Insert the crossings of the polygon boundary with vertical lines."""
    pts = list(verts)
    for lam in sorted(set(xs)):
        out = []
        n = len(pts)
        for i in range(n):
            a, b = pts[i], pts[(i + 1) % n]
            out.append(a)
            if (a.x - lam) * (b.x - lam) < 0:
                y = a.y + (b.y - a.y) * (lam - a.x) / (b.x - a.x)
                out.append(RatPoint2(lam, y))
        pts = out
    return pts


def piecewise_shear(points, terms) -> list[RatPoint2]:
    """Map points by ``y -> y + sum(u * max(0, x - lam))`` for (u, lam) in terms.

    A positive ``u`` is the map ``t_lam``; a negative one its inverse.
    """
    out = []
    for p in points:
        dy = sum((u * (p.x - lam) for u, lam in terms if p.x > lam), Fraction(0))
        out.append(RatPoint2(p.x, p.y + dy))
    return out


def left_piecewise_shear(points, terms) -> list[RatPoint2]:
    """Map points by ``y -> y + sum(u * min(0, x - mu))`` (powers of t-tilde_mu)."""
    out = []
    for p in points:
        dy = sum((u * (p.x - mu) for u, mu in terms if p.x < mu), Fraction(0))
        out.append(RatPoint2(p.x, p.y + dy))
    return out


def shear_polygon(P: MarkedWeightedPolygon, terms, marks=None, left=False, check=True) -> MarkedWeightedPolygon:
    terms = [(u, Fraction(lam)) for u, lam in terms if u]
    f = left_piecewise_shear if left else piecewise_shear
    verts = f(_split_at(P.vertices, [lam for _, lam in terms]), terms)
    src_marks = P.marked if marks is None else marks
    new_marks = [Mark(q, m.eps) for q, m in zip(f([m.point for m in src_marks], terms), src_marks)]
    cleaned = _clean_cycle(verts)
    if check and not is_convex_ccw(cleaned):
        raise NotConvex("piecewise shear produced a non-convex polygon")
    return MarkedWeightedPolygon(tuple(cleaned), tuple(new_marks))


class NotConvex(ValidityError):
    pass


def act_eps(P: MarkedWeightedPolygon, eps_prime: Sequence[int], check=True) -> MarkedWeightedPolygon:
    """The G_s action: flip the cuts where ``eps_prime`` is -1."""
    if len(eps_prime) != P.s:
        raise LengthMismatch(f"expected {P.s} signs, got {len(eps_prime)}")
    terms = []
    new_marks = []
    for m, e2 in zip(P.marked, eps_prime):
        if e2 not in (1, -1):
            raise ValueError("signs must be +1 or -1")
        u = (m.eps - m.eps * e2) // 2
        terms.append((u, m.point.x))
        new_marks.append(Mark(m.point, m.eps * e2))
    return shear_polygon(P, terms, marks=new_marks, check=check)


def is_admissible(P: MarkedWeightedPolygon) -> bool:
    for pattern in product((1, -1), repeat=P.s):
        try:
            Q = act_eps(P, pattern, check=True)
        except NotConvex:
            return False
        if not is_convex_ccw(Q.vertices):
            return False
    return True


def reflect(P: MarkedWeightedPolygon, axis: str) -> MarkedWeightedPolygon:
    """J-reflection ``(x, y) -> (-x, y)`` or H-reflection ``(x, y) -> (x, -y)``."""
    axis = axis.upper()
    if axis == "J":
        verts = tuple(RatPoint2(-v.x, v.y) for v in P.vertices)
        marks = tuple(Mark(RatPoint2(-m.point.x, m.point.y), m.eps) for m in P.marked)
    elif axis == "H":
        verts = tuple(RatPoint2(v.x, -v.y) for v in P.vertices)
        marks = tuple(Mark(RatPoint2(m.point.x, -m.point.y), -m.eps) for m in P.marked)
    else:
        raise ValueError("axis must be 'J' or 'H'")
    return MarkedWeightedPolygon(verts, marks)


def canonical_form(P: MarkedWeightedPolygon) -> MarkedWeightedPolygon:
    """Unique representative of the G_s x T orbit.

    All cuts point up; the bottom edge leaving the lexicographically
    minimal vertex gets slope in [0, 1); that vertex is moved to y = 0.
    """
    Q = act_eps(P, [m.eps for m in P.marked])
    v0, v1 = Q.vertices[0], Q.vertices[1]
    slope = (v1.y - v0.y) / (v1.x - v0.x)
    k = -(slope.numerator // slope.denominator)
    Q = act_tau(Q, k, 0)
    return act_tau(Q, 0, -Q.vertices[0].y)


def orbits_equal(P: MarkedWeightedPolygon, Q: MarkedWeightedPolygon) -> bool:
    return canonical_form(P) == canonical_form(Q)


def area(P: MarkedWeightedPolygon) -> Fraction:
    return _signed_area2(P.vertices) / 2


def vertical_walls(P: MarkedWeightedPolygon) -> dict:
    """Vertical edges keyed by side ('left' or 'right'), as (bottom, top)."""
    walls = {}
    x0, x1 = P.xmin(), P.xmax()
    for a, b in P.edges():
        if a.x == b.x:
            lo, hi = (a, b) if a.y < b.y else (b, a)
            if a.x == x0:
                walls["left"] = (lo, hi)
            elif a.x == x1:
                walls["right"] = (lo, hi)
    return walls


# --- JSON ---------------------------------------------------------------------

def to_json(P: MarkedWeightedPolygon) -> dict:
    f = format_rational
    return {
        "vertices": [[f(v.x), f(v.y)] for v in P.vertices],
        "marked": [{"x": f(m.point.x), "y": f(m.point.y), "eps": m.eps} for m in P.marked],
    }


def from_json(obj: dict) -> MarkedWeightedPolygon:
    """Inverse of :func:`to_json`; coordinates must be exact (``"p/q"`` strings or ints)."""
    try:
        verts = tuple(point(x, y) for x, y in obj["vertices"])
        marks = tuple(Mark(point(m["x"], m["y"]), int(m.get("eps", 1))) for m in obj.get("marked", ()))
    except (KeyError, TypeError) as exc:
        raise StructureError(f"malformed polygon record: {exc}") from exc
    return MarkedWeightedPolygon(verts, marks)


def dumps(P: MarkedWeightedPolygon) -> str:
    return json.dumps(to_json(P), separators=(",", ":"))


def loads(text: str) -> MarkedWeightedPolygon:
    return from_json(json.loads(text))
