"""Exhaustive oracles: frozen values on hand-checked instances, then
cross-checks against independent implementations."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given

from congestlab.graph import BipartiteGraph, IndependentSet, Matching, build_graph, generate
from congestlab.oracles import (
    MAX_IS_NODES,
    MAX_MATCHING_EDGES,
    OracleSizeError,
    berge_matching,
    brute_is,
    brute_matching,
    half_paths,
    is_maximal,
    path_stats,
    shortest_aug_len,
)

from conftest import bipartite_graphs, graphs


def unit(edges, n):
    return build_graph(edges, {v: 1 for v in range(n)})


TRIANGLE = [(0, 1), (1, 2), (0, 2)]
P3 = [(0, 1), (1, 2)]
P4 = [(0, 1), (1, 2), (2, 3)]
C6 = [(i, (i + 1) % 6) for i in range(6)]


# frozen values ----------------------------------------------------------


def test_brute_is_frozen():
    star = build_graph([(0, 1), (0, 2)], {0: 5, 1: 3, 2: 3})
    res = brute_is(star)
    assert res.value == 6
    assert res.witness == IndependentSet({1, 2})
    assert brute_is(unit(TRIANGLE, 3)).value == 1
    assert brute_is(unit([], 4)).value == 4
    assert brute_is(unit([], 0)).value == 0


def test_brute_matching_frozen():
    assert brute_matching(unit(P4, 4)).value == 2
    tri = build_graph(TRIANGLE, {0: 1, 1: 1, 2: 1}, edge_weights={(0, 1): 5, (1, 2): 3, (0, 2): 3})
    res = brute_matching(tri)
    assert res.value == 5 and res.witness == Matching([(0, 1)])
    assert brute_matching(tri, weighted=False).value == 1
    assert brute_matching(unit(C6, 6)).value == 3


def test_is_maximal_frozen():
    assert is_maximal(unit(TRIANGLE, 3), IndependentSet({2}))
    assert not is_maximal(unit(P3, 3), IndependentSet({0}))
    assert not is_maximal(unit([], 3), IndependentSet())
    assert is_maximal(unit(P4, 4), Matching([(1, 2)]))
    assert not is_maximal(unit(P4, 4), Matching([(0, 1)]))
    assert not is_maximal(unit(P3, 3), IndependentSet({0, 1}))


def test_shortest_aug_len_frozen():
    assert shortest_aug_len(unit([(0, 1)], 2), Matching()) == 1
    assert shortest_aug_len(unit(P4, 4), Matching([(1, 2)])) == 3
    assert shortest_aug_len(unit(P4, 4), Matching([(0, 1), (2, 3)])) == math.inf
    assert shortest_aug_len(unit(P4, 4), Matching([(1, 2)]), active={1, 2, 3}) == math.inf


def test_path_stats_frozen():
    g = unit(P4, 4)
    bg = BipartiteGraph(g, {0: "A", 1: "B", 2: "A", 3: "B"})
    m = Matching([(1, 2)])
    assert half_paths(bg, m, 3) == [(0, 1, 2, 3)]
    assert path_stats(bg, m, 3) == {0: 1, 1: 1, 2: 1, 3: 1}
    alpha = {0: Fraction(1, 2), 2: Fraction(1, 3)}
    assert path_stats(bg, m, 3, alpha) == {v: Fraction(1, 6) for v in range(4)}
    # a node off every path
    g5 = unit(P4 + [(3, 4)], 5)
    bg5 = BipartiteGraph(g5, {0: "A", 1: "B", 2: "A", 3: "B", 4: "A"})
    stats = path_stats(bg5, Matching([(1, 2), (3, 4)]), 3)
    assert stats[4] == 0 and stats[3] == 0


def test_size_guards():
    big = generate("erdos_renyi", n=MAX_IS_NODES + 1, p=0.1, seed=1)
    with pytest.raises(OracleSizeError):
        brute_is(big)
    dense = generate("erdos_renyi", n=12, p=1.0, seed=1)
    assert dense.m > MAX_MATCHING_EDGES
    with pytest.raises(OracleSizeError):
        brute_matching(dense)


# cross-checks -------------------------------------------------------------


def _all_independent_sets(g):
    for r in range(g.n + 1):
        for s in itertools.combinations(g.nodes, r):
            if all(not g.has_edge(u, v) for u, v in itertools.combinations(s, 2)):
                yield s


@given(graphs(max_n=8))
def test_brute_is_matches_enumeration(g):
    best = max(sum(g.weight(v) for v in s) for s in _all_independent_sets(g))
    res = brute_is(g)
    assert res.value == best
    assert res.witness.is_valid(g)
    assert sum(g.weight(v) for v in res.witness) == best


@given(graphs(max_n=9, edge_weights=True, max_m=MAX_MATCHING_EDGES))
def test_brute_matching_matches_networkx(g):
    ref = nx.Graph()
    ref.add_nodes_from(g.nodes)
    for (u, v), w in g.edge_weights.items():
        ref.add_edge(u, v, weight=w)
    want = sum(g.edge_weight(u, v) for u, v in nx.max_weight_matching(ref))
    res = brute_matching(g)
    assert res.value == want
    assert res.witness.is_valid(g)
    assert brute_matching(g, weighted=False).value == len(nx.max_weight_matching(nx.Graph(list(g.edges)), maxcardinality=True))


@given(graphs(max_n=9, max_m=MAX_MATCHING_EDGES))
def test_berge_agrees_with_branch_and_bound(g):
    m = berge_matching(g)
    assert m.is_valid(g)
    assert len(m) == brute_matching(g, weighted=False).value
    assert shortest_aug_len(g, m) == math.inf


@given(graphs(max_n=8, max_m=MAX_MATCHING_EDGES))
def test_shortest_aug_len_is_odd_and_consistent_with_optimum(g):
    m = Matching()
    # grow greedily to get a non-trivial matching
    used = set()
    for u, v in g.edges:
        if u not in used and v not in used and (u + v) % 3:
            m = Matching(m | {(u, v)})
            used |= {u, v}
    length = shortest_aug_len(g, m)
    opt = brute_matching(g, weighted=False).value
    if len(m) == opt:
        assert length == math.inf
    else:
        assert length % 2 == 1


@given(bipartite_graphs(max_side=5))
def test_path_stats_counts_paths_at_unit_alpha(bg):
    m = berge_matching(bg.graph)
    stats = path_stats(bg, Matching(), 1)
    for v in bg.graph.nodes:
        assert stats[v] == bg.graph.degree(v)
    assert all(x == 0 for x in path_stats(bg, m, 1).values())
