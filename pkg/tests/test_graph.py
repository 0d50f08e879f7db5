from __future__ import annotations

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from congestlab.graph import (
    BipartiteGraph,
    GraphValidationError,
    IndependentSet,
    Matching,
    build_graph,
    dumps,
    edge_id,
    generate,
    line_graph,
    loads,
    read_graph,
    validate_solution,
    write_graph,
)

from conftest import graphs


def star_531():
    return build_graph([(0, 1), (0, 2)], {0: 5, 1: 3, 2: 3})


def test_build_sorts_adjacency_and_canonicalizes_edges():
    g = build_graph([(2, 0), (1, 0)], {0: 5, 1: 3, 2: 3})
    assert g.nodes == (0, 1, 2)
    assert g.edges == ((0, 1), (0, 2))
    assert g.neighbors(0) == (1, 2)
    assert g.max_degree == 2
    assert g.max_weight == 5


def test_isolated_nodes_come_from_weights():
    g = build_graph([], {3: 1, 7: 2})
    assert g.nodes == (3, 7)
    assert g.m == 0
    assert g.max_degree == 0


@pytest.mark.parametrize(
    "edges, weights, kind",
    [
        ([(0, 0)], {0: 1}, "self-loop"),
        ([(0, 1), (1, 0)], {0: 1, 1: 1}, "duplicate-edge"),
        ([(0, 1)], {0: 1, 1: 0}, "bad-weight"),
        ([(0, 1)], {0: 1, 1: -4}, "bad-weight"),
        ([(0, 2)], {0: 1, 1: 1}, "dangling-endpoint"),
        ([(0, 1)], {-1: 1, 0: 1, 1: 1}, "bad-node"),
    ],
)
def test_build_rejects_malformed_input(edges, weights, kind):
    with pytest.raises(GraphValidationError) as exc:
        build_graph(edges, weights)
    assert exc.value.kind == kind


def test_edge_weights_must_cover_every_edge():
    with pytest.raises(GraphValidationError):
        build_graph([(0, 1), (1, 2)], {0: 1, 1: 1, 2: 1}, edge_weights={(0, 1): 3})


def test_validate_solution_examples():
    g = star_531()
    assert validate_solution(g, IndependentSet({1, 2})) == (True, 6, "")
    assert not validate_solution(g, IndependentSet({0, 1})).valid
    tri = build_graph([(0, 1), (1, 2), (0, 2)], {0: 1, 1: 1, 2: 1})
    assert validate_solution(tri, Matching([(0, 1)])).valid
    bad = validate_solution(tri, Matching([(0, 1), (1, 2)]))
    assert not bad.valid and "endpoint" in bad.reason
    assert not validate_solution(g, Matching([(1, 2)])).valid


def test_matching_canonical_form():
    m = Matching([(3, 1), (0, 2)])
    assert m == {(1, 3), (0, 2)}
    assert m.mate() == {1: 3, 3: 1, 0: 2, 2: 0}


def test_line_graph_of_star_is_clique():
    g = generate("star", k=4, seed=0)
    lm = line_graph(g)
    assert lm.graph.n == 4
    assert lm.graph.m == 6
    assert all(p == 0 for p in lm.primary)


def test_line_graph_weights_are_edge_weights():
    g = build_graph([(0, 1), (1, 2)], {0: 1, 1: 1, 2: 1}, edge_weights={(0, 1): 7, (1, 2): 2})
    lm = line_graph(g)
    assert [lm.graph.weight(i) for i in lm.graph.nodes] == [7, 2]
    assert lm.edge_of(0) == (0, 1)


@given(graphs(max_n=8))
def test_line_graph_matches_networkx(g):
    lm = line_graph(g)
    ref = nx.line_graph(nx.Graph(list(g.edges)))
    got = {edge_id(lm.edges[a], lm.edges[b]) for a, b in lm.graph.edges}
    want = {edge_id(tuple(sorted(a)), tuple(sorted(b))) for a, b in ref.edges}
    assert got == want
    assert lm.graph.n == g.m
    for i, (u, v) in enumerate(lm.edges):
        assert lm.primary[i] == min(u, v) and lm.secondary[i] == max(u, v)


@given(graphs(max_n=10, edge_weights=True))
def test_text_round_trip(g):
    assert loads(dumps(g)) == g


def test_file_round_trip(tmp_path):
    g = generate("erdos_renyi", n=10, p=0.3, seed=7, weight_range=(1, 64))
    path = tmp_path / "g.txt"
    write_graph(g, path)
    assert read_graph(path) == g


def test_loads_rejects_weight_above_header():
    with pytest.raises(GraphValidationError):
        loads("2 1 4\n0 1\n0 5\n1 1\n")


def test_loads_rejects_missing_header():
    with pytest.raises(GraphValidationError):
        loads("0 1\n")


def test_generator_is_reproducible():
    a = generate("erdos_renyi", n=10, p=0.3, seed=7, weight_range=(1, 64))
    b = generate("erdos_renyi", n=10, p=0.3, seed=7, weight_range=(1, 64))
    c = generate("erdos_renyi", n=10, p=0.3, seed=8, weight_range=(1, 64))
    assert a == b
    assert dumps(a) != dumps(c)


def test_generator_kinds():
    assert generate("path", n=5).m == 4
    assert generate("cycle", n=5).m == 5
    assert generate("star", k=3, weights={0: 5, 1: 3, 2: 3, 3: 1}).weight(0) == 5
    bg = generate("bipartite", n_a=3, n_b=4, p=1.0)
    assert isinstance(bg, BipartiteGraph)
    assert bg.graph.m == 12 and len(bg.A) == 3 and len(bg.B) == 4
    with pytest.raises(ValueError):
        generate("hypercube", n=4)
    with pytest.raises(ValueError):
        generate("cycle", n=2)


def test_bipartite_labels_checked():
    g = build_graph([(0, 1)], {0: 1, 1: 1})
    with pytest.raises(GraphValidationError):
        BipartiteGraph(g, {0: "A", 1: "A"})


@given(graphs(max_n=9), st.data())
def test_induced_subgraph_keeps_only_inner_edges(g, data):
    keep = data.draw(st.sets(st.sampled_from(g.nodes))) if g.n else set()
    sub = g.induced(keep)
    assert set(sub.nodes) == keep
    assert set(sub.edges) == {e for e in g.edges if e[0] in keep and e[1] in keep}
    assert all(sub.weight(v) == g.weight(v) for v in keep)
