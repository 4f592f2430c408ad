import random
from fractions import Fraction as Fr

import pytest

from polygen import random_valid_polygon
from semitoric.helix import build_minimal_polygon
from semitoric.lattice import LatticeError, VertexKind
from semitoric.polygon import act_eps, act_tau, classify, polygon, vertical_walls
from semitoric.s1space import HALF_REASONS, graph_from_polygon, obstruction_orbit_invariant, transition_obstructions

POLY_GRAPH = polygon([(0, 0), (0, 1), (1, 3), (2, 4), (3, Fr(9, 2)), (4, 4), (8, 0)],
                     [((1, Fr(11, 10)), 1), ((3, Fr(13, 5)), 1)])


def test_poly_graph_figure():
    g = graph_from_polygon(POLY_GRAPH)
    assert len(g.fat_vertices) == 1
    assert g.fat_vertices[0]["j"] == 0 and g.fat_vertices[0]["area"] == 1
    assert sorted(v["j"] for v in g.regular_vertices) == [2, 4, 8]
    assert sorted(v["j"] for v in g.isolated_vertices) == [1, 3]
    assert [e["k"] for e in g.edges] == [2]
    assert sorted(g.vertex_j(x) for x in g.edges[0]["endpoints"]) == [2, 4]


def test_poly_graph_text_rendering():
    text = graph_from_polygon(POLY_GRAPH).render_text(width=33)
    edge_row, node_row, iso_row = text.splitlines()
    assert node_row.startswith("O") and node_row.count("*") == 3
    assert iso_row.count("x") == 2
    assert "2" in edge_row


def test_type_one_graph():
    g = graph_from_polygon(build_minimal_polygon("1", alpha=1, h=Fr(1, 4)))
    assert g.fat_vertices == []
    assert [v["j"] for v in g.isolated_vertices] == [1]
    assert [e["k"] for e in g.edges] == [2]
    assert sorted(g.vertex_j(x) for x in g.edges[0]["endpoints"]) == [0, 2]


def test_square_graph():
    g = graph_from_polygon(polygon([(0, 0), (1, 0), (1, 1), (0, 1)]))
    assert [v["j"] for v in g.fat_vertices] == [0, 1]
    assert g.edges == [] and g.regular_vertices == []


def test_graph_json():
    data = graph_from_polygon(POLY_GRAPH).to_json()
    assert data["fat_vertices"][0] == {"id": "F0", "j": "0", "genus": 0, "area": "1"}
    assert data["edges"][0]["k"] == 2


def test_obstructions_type_one():
    r = transition_obstructions(build_minimal_polygon("1", alpha=1, h=Fr(1, 4)), 0)
    assert r.semitoric_family_blocked and "non-integer slope" in r.semitoric_reason
    assert not r.half_family_blocked


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_obstructions_type_3b(n):
    r = transition_obstructions(build_minimal_polygon("3b", beta=1, n=n, h=Fr(1, 2)), 0)
    assert r.semitoric_family_blocked


@pytest.mark.parametrize("n", [3, 4, 5])
def test_obstructions_type_3c(n):
    P = build_minimal_polygon("3c", alpha=Fr(1, 2), beta=1, n=n, h=Fr(1, 4))
    r = transition_obstructions(P, 0)
    assert r.semitoric_family_blocked and "non-integer slope" in r.semitoric_reason


def test_obstructions_type_2a_clear():
    P = build_minimal_polygon("2a", alpha=1, beta=1, h1=Fr(1, 2), h2=Fr(1, 2))
    for i in (0, 1):
        r = transition_obstructions(P, i)
        assert not r.semitoric_family_blocked and not r.half_family_blocked


def test_bad_index():
    with pytest.raises(IndexError):
        transition_obstructions(build_minimal_polygon("1", alpha=1, h=Fr(1, 4)), 1)


def test_half_family_two_elliptic_points():
    # Delzant vertex (1, 0) below the mark and a 1-hidden vertex (1, 2) above it
    P = polygon([(Fr(1, 2), Fr(1, 2)), (1, 0), (2, 0), (2, 1), (1, 2), (Fr(1, 2), Fr(3, 2))], [((1, 1), 1)])
    r = transition_obstructions(P, 0)
    assert r.semitoric_family_blocked
    assert r.half_family_blocked and r.half_reason == HALF_REASONS[0]
    assert obstruction_orbit_invariant(P, 0)


@pytest.fixture(scope="module")
def corpus():
    rng = random.Random(31)
    return [random_valid_polygon(rng) for _ in range(25)]


def test_graph_counts(corpus):
    for P in corpus:
        g = graph_from_polygon(P)
        reports = classify(P)
        walls = vertical_walls(P)
        wall_pts = {p for w in walls.values() for p in w}
        regular = [r for r in reports if r.kind in (VertexKind.DELZANT, VertexKind.HIDDEN)
                   and r.vertex not in wall_pts]
        assert len(g.isolated_vertices) == P.s
        assert len(g.fat_vertices) == len(walls)
        assert len(g.regular_vertices) == len(regular)
        assert all(v["area"] > 0 for v in g.fat_vertices)
        for e in g.edges:
            assert e["k"] >= 2
            a, b = (g.vertex_j(x) for x in e["endpoints"])
            assert a != b


def test_graph_is_representative_independent(corpus):
    rng = random.Random(32)
    for P in corpus:
        base = graph_from_polygon(P).signature()
        Q = act_tau(P, rng.randint(-2, 2), Fr(rng.randint(-3, 3)))
        assert graph_from_polygon(Q).signature() == base
        try:
            R = act_eps(P, [rng.choice((1, -1)) for _ in range(P.s)])
        except LatticeError:
            continue
        assert graph_from_polygon(R).signature() == base


def test_obstruction_implication_and_orbit_invariance(corpus):
    for P in corpus:
        for i in range(P.s):
            r = transition_obstructions(P, i)
            if not r.semitoric_family_blocked:
                assert not r.half_family_blocked
            if r.half_family_blocked:
                assert r.half_reason in HALF_REASONS
            assert obstruction_orbit_invariant(P, i)
