"""Karshon graphs of the underlying circle actions, and family obstructions.

The graph is read off any representative of the marked polygon: vertical
walls become fat vertices, marked points become isolated vertices,
Delzant and hidden corners become regular vertices, and chains of edges
of slope b/k (k >= 2) joined through fake corners become edges labeled k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .lattice import VertexKind, canonical_direction, format_rational, primitive_direction
from .polygon import MarkedWeightedPolygon, act_eps, classify, vertical_walls


@dataclass
class KarshonGraph:
    fat_vertices: list = field(default_factory=list)       # {"id", "j", "genus", "area"}
    regular_vertices: list = field(default_factory=list)   # {"id", "j"}
    isolated_vertices: list = field(default_factory=list)  # {"id", "j"}
    edges: list = field(default_factory=list)              # {"k", "endpoints": (id, id)}

    def vertex_j(self, vid: str) -> Fraction:
        for group in (self.fat_vertices, self.regular_vertices, self.isolated_vertices):
            for v in group:
                if v["id"] == vid:
                    return v["j"]
        raise KeyError(vid)

    def signature(self):
        """Relabeling-free summary used to compare graphs."""
        return (
            tuple(sorted((v["j"], v["area"]) for v in self.fat_vertices)),
            tuple(sorted(v["j"] for v in self.regular_vertices)),
            tuple(sorted(v["j"] for v in self.isolated_vertices)),
            tuple(sorted((e["k"],) + tuple(sorted(self.vertex_j(x) for x in e["endpoints"])) for e in self.edges)),
        )

    def to_json(self) -> dict:
        f = format_rational
        return {
            "fat_vertices": [{"id": v["id"], "j": f(v["j"]), "genus": v["genus"], "area": f(v["area"])}
                             for v in self.fat_vertices],
            "regular_vertices": [{"id": v["id"], "j": f(v["j"])} for v in self.regular_vertices],
            "isolated_vertices": [{"id": v["id"], "j": f(v["j"])} for v in self.isolated_vertices],
            "edges": [{"k": e["k"], "endpoints": list(e["endpoints"])} for e in self.edges],
        }

    def render_text(self, width: int = 60) -> str:
        """One row per vertex kind, with j mapped to the horizontal position."""
        js = [v["j"] for g in (self.fat_vertices, self.regular_vertices, self.isolated_vertices) for v in g]
        lo, hi = min(js), max(js)
        scale = (width - 1) / (hi - lo) if hi > lo else 0

        def col(j):
            return int(round(float((j - lo) * scale)))

        rows = []
        edge_row = [" "] * width
        for e in self.edges:
            a, b = sorted(col(self.vertex_j(x)) for x in e["endpoints"])
            for c in range(a, b + 1):
                edge_row[c] = "-"
            label = str(e["k"])
            mid = (a + b) // 2
            edge_row[mid:mid + len(label)] = list(label)
        node_row = [" "] * width
        for v in self.fat_vertices:
            node_row[col(v["j"])] = "O"
        for v in self.regular_vertices:
            node_row[col(v["j"])] = "*"
        iso_row = [" "] * width
        for v in self.isolated_vertices:
            iso_row[col(v["j"])] = "x"
        for r in (edge_row, node_row, iso_row):
            rows.append("".join(r).rstrip())
        return "\n".join(rows)


def _edge_k(a, b) -> int:
    """Isotropy order of a boundary edge: denominator of its slope (0 for vertical)."""
    dx, _ = canonical_direction(primitive_direction(a, b))
    return abs(dx)


def _chains(P: MarkedWeightedPolygon, reports):
    """Maximal boundary chains between consecutive non-fake corners.

    Yields (start_index, end_index, [edges]) with indices into P.vertices.
    """
    n = len(P.vertices)
    anchors = [i for i, r in enumerate(reports) if r.kind != VertexKind.FAKE]
    for a_pos, i in enumerate(anchors):
        j = anchors[(a_pos + 1) % len(anchors)]
        edges = []
        cur = i
        while True:
            nxt = (cur + 1) % n
            edges.append((P.vertices[cur], P.vertices[nxt]))
            cur = nxt
            if cur == j:
                break
        yield i, j, edges


def graph_from_polygon(P: MarkedWeightedPolygon) -> KarshonGraph:
    reports = classify(P)
    g = KarshonGraph()
    walls = vertical_walls(P)
    wall_points = {}
    for side in ("left", "right"):
        if side in walls:
            lo, hi = walls[side]
            vid = f"F{len(g.fat_vertices)}"
            g.fat_vertices.append({"id": vid, "j": lo.x, "genus": 0, "area": hi.y - lo.y})
            wall_points[lo] = wall_points[hi] = vid
    ids = {}
    for i, r in enumerate(reports):
        if r.kind == VertexKind.FAKE:
            continue
        if r.vertex in wall_points:
            ids[i] = wall_points[r.vertex]
            continue
        vid = f"R{len(g.regular_vertices)}"
        g.regular_vertices.append({"id": vid, "j": r.vertex.x})
        ids[i] = vid
    for m_idx, m in enumerate(P.marked):
        g.isolated_vertices.append({"id": f"I{m_idx}", "j": m.point.x})
    for i, j, edges in _chains(P, reports):
        ks = {_edge_k(a, b) for a, b in edges}
        k = _edge_k(*edges[0])
        if k >= 2:
            if len(ks) != 1:
                raise ValueError(f"chain from {P.vertices[i]} mixes isotropy orders {sorted(ks)}")
            g.edges.append({"k": k, "endpoints": (ids[i], ids[j]), "span": (P.vertices[i].x, P.vertices[j].x)})
    return g


@dataclass(frozen=True)
class ObstructionReport:
    mark_index: int
    semitoric_family_blocked: bool
    semitoric_reason: str
    half_family_blocked: bool
    half_reason: str

    def to_json(self) -> dict:
        return {
            "mark_index": self.mark_index,
            "semitoric_family_blocked": self.semitoric_family_blocked,
            "semitoric_reason": self.semitoric_reason,
            "half_family_blocked": self.half_family_blocked,
            "half_reason": self.half_reason,
        }


HALF_REASONS = (
    "two elliptic-elliptic points in the J-fiber",
    "two distinct Z_k-spheres in the J-fiber",
    "an elliptic-elliptic point and a Z_k-sphere in the J-fiber",
)


def _pt(p) -> str:
    return f"({format_rational(p.x)}, {format_rational(p.y)})"


def transition_obstructions(P: MarkedWeightedPolygon, mark_index: int) -> ObstructionReport:
    """Obstructions to reaching mark ``mark_index`` as the transition point of a family."""
    if not 0 <= mark_index < P.s:
        raise IndexError(f"bad mark index {mark_index}")
    reports = classify(P)
    x = P.marked[mark_index].point.x
    ee = [r.vertex for r in reports if r.kind in (VertexKind.DELZANT, VertexKind.HIDDEN) and r.vertex.x == x]
    bad_edges = [(a, b) for a, b in P.edges()
                 if a.x != b.x and _edge_k(a, b) >= 2 and min(a.x, b.x) <= x <= max(a.x, b.x)]
    if ee:
        st_blocked, st_reason = True, f"elliptic-elliptic vertex {_pt(ee[0])} on the line x = {format_rational(x)}"
    elif bad_edges:
        a, b = bad_edges[0]
        st_blocked, st_reason = True, f"line meets the non-integer slope edge {_pt(a)}-{_pt(b)}"
    else:
        st_blocked, st_reason = False, ""
    g = graph_from_polygon(P)
    spheres = [e for e in g.edges if min(e["span"]) < x < max(e["span"])]
    half_blocked, half_reason = False, ""
    if len(ee) >= 2:
        half_blocked, half_reason = True, HALF_REASONS[0]
    elif len(spheres) >= 2:
        half_blocked, half_reason = True, HALF_REASONS[1]
    elif ee and spheres:
        half_blocked, half_reason = True, HALF_REASONS[2]
    return ObstructionReport(mark_index, st_blocked, st_reason, half_blocked, half_reason)


def obstruction_orbit_invariant(P: MarkedWeightedPolygon, mark_index: int) -> bool:
    """Check that both verdicts agree on every sign pattern of the G_s orbit."""
    base = transition_obstructions(P, mark_index)
    for pattern in product((1, -1), repeat=P.s):
        Q = act_eps(P, pattern)
        r = transition_obstructions(Q, mark_index)
        if (r.semitoric_family_blocked, r.half_family_blocked) != (base.semitoric_family_blocked,
                                                                     base.half_family_blocked):
            return False
    return True
