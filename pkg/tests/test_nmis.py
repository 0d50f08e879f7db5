from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from congestlab.engine import EngineConfig
from congestlab.graph import IndependentSet, Matching, build_graph, generate, validate_solution
from congestlab.nmis import NmisParams, WeightBuckets, mcm_2eps, mwm_2eps, nmis_rounds, nmis_run
from congestlab.oracles import brute_matching

from conftest import graphs


def unit(edges, n):
    return build_graph(edges, {v: 1 for v in range(n)})


def weighted(edges, ew):
    nodes = {x for e in edges for x in e}
    return build_graph(edges, {v: 1 for v in nodes}, edge_weights=ew)


def test_nmis_rounds_formula():
    assert nmis_rounds(1, 4, 0.1, 1.0) == 37
    assert nmis_rounds(16, 4, 0.1, 1.0) == 39
    assert nmis_rounds(16, 4, 0.1, 10.0) == 389
    with pytest.raises(ValueError):
        NmisParams(K=1)
    with pytest.raises(ValueError):
        NmisParams(delta=1.0)
    assert NmisParams(T=5).iterations(100) == 5


def test_edgeless_graph_everyone_joins_in_the_first_iteration():
    s, residual, rep = nmis_run(unit([], 5), NmisParams(T=3), seed=0, coins=lambda v, i: True)
    assert s == IndependentSet(range(5))
    assert residual == set()
    assert rep.terminated


def test_single_edge_never_both_join():
    g = unit([(0, 1)], 2)
    for seed in range(50):
        s, residual, _ = nmis_run(g, NmisParams(T=4), seed)
        assert len(s) <= 1
        assert len(s) == 1 or residual == {0, 1}


def test_k2_with_forced_coins_leaves_both_residual():
    s, residual, rep = nmis_run(unit([(0, 1)], 2), NmisParams(T=5), coins=lambda v, i: True)
    assert s == IndependentSet()
    assert residual == {0, 1}
    assert rep.extra["T"] == 5


@given(graphs(max_n=12), st.integers(0, 2**32), st.integers(1, 12))
def test_output_is_independent_and_partitions_nodes(g, seed, T):
    s, residual, rep = nmis_run(g, NmisParams(T=T), seed)
    assert s.is_valid(g)
    assert not (set(s) & residual)
    # every decided node outside the set has a neighbor in it
    for v in set(g.nodes) - set(s) - residual:
        assert any(u in s for u in g.neighbors(v))
    assert rep.terminated


@given(graphs(max_n=10), st.integers(0, 2**32), st.sampled_from([2, 3, 4]))
def test_marking_probability_never_exceeds_one_over_k(g, seed, K):
    _, _, rep = nmis_run(g, NmisParams(K=K, T=10, trace=True), seed)
    for hist in rep.extra["history"].values():
        prev_next = 1
        for i, j, d, jn, _ in hist:
            assert j >= 1 and j == prev_next
            assert jn == (j + 1 if d >= 2 else max(1, j - 1))
            assert 0 <= d <= 2
            prev_next = jn


def test_coin_frequency_tracks_probability():
    g = unit([], 1)
    hits = sum(1 for seed in range(4000) if nmis_run(g, NmisParams(K=4, T=1), seed)[0])
    # isolated node marks with probability 1/4 and otherwise stays residual
    assert abs(hits / 4000 - Fraction(1, 4)) < 0.03


# (2+eps) matchings ---------------------------------------------------------


def test_mcm_2eps_examples():
    m, rep = mcm_2eps(unit([], 3))
    assert m == Matching() and rep.extra["T"] == 0
    m, _ = mcm_2eps(unit([(0, 1)], 2), seed=3)
    assert m == Matching([(0, 1)])
    c4 = unit([(0, 1), (1, 2), (2, 3), (0, 3)], 4)
    for seed in range(10):
        m, _ = mcm_2eps(c4, seed=seed)
        assert m.is_valid(c4) and len(m) >= 1
    with pytest.raises(ValueError):
        mcm_2eps(c4, eps=0)


def test_mwm_2eps_examples():
    two = weighted([(0, 1), (2, 3)], {(0, 1): 10, (2, 3): 1})
    m, rep = mwm_2eps(two, seed=1)
    assert validate_solution(two, m).weight == 11
    p3 = weighted([(0, 1), (1, 2)], {(0, 1): 10, (1, 2): 1})
    assert mwm_2eps(p3, seed=2)[0] == Matching([(0, 1)])
    star = weighted([(0, 1), (0, 2), (0, 3)], {(0, 1): 8, (0, 2): 4, (0, 3): 2})
    assert mwm_2eps(star, seed=3)[0] == Matching([(0, 1)])
    assert rep.extra["weight_history"][-1] == 11
    with pytest.raises(ValueError):
        mwm_2eps(p3, eps=-1)


@given(graphs(max_n=9, max_m=24), st.integers(0, 2**32))
def test_mcm_2eps_is_a_valid_matching(g, seed):
    m, rep = mcm_2eps(g, 0.5, seed)
    assert m.is_valid(g)
    assert rep.violations == []
    if not rep.extra["residual_edges"]:
        assert 2.5 * len(m) >= brute_matching(g, weighted=False).value


@given(graphs(max_n=8, edge_weights=True, max_m=20), st.integers(0, 2**32))
def test_mwm_2eps_is_valid_and_never_loses_weight(g, seed):
    m, rep = mwm_2eps(g, 0.5, seed)
    assert m.is_valid(g)
    hist = rep.extra["weight_history"]
    assert all(a <= b for a, b in zip(hist, hist[1:]))
    assert hist[-1] == validate_solution(g, m).weight


def test_mwm_2eps_ratio_on_random_graphs():
    worst = 0.0
    for seed in range(40):
        g = generate("erdos_renyi", n=9, p=0.4, seed=seed, weight_range=(1, 100), edge_weights=True)
        if g.m == 0 or g.m > 24:
            continue
        m, _ = mwm_2eps(g, 0.5, seed)
        worst = max(worst, brute_matching(g).value / validate_solution(g, m).weight)
    assert worst <= 2.5


@pytest.mark.parametrize("w, key", [(1, (0, 0)), (15, (0, 6)), (16, (1, 0)), (24, (1, 1)), (255, (1, 6)), (256, (2, 0))])
def test_weight_buckets(w, key):
    assert WeightBuckets(0.5).key(w) == key


@given(st.integers(1, 10**6), st.sampled_from([0.1, 0.5, 1.0]))
def test_weight_bucket_bounds(w, eps):
    b = WeightBuckets(eps)
    big, small = b.key(w)
    lo = 16**big * (1 + eps) ** small
    assert lo <= w < lo * (1 + eps) or 16 ** (big + 1) <= lo * (1 + eps)
    assert 16**big <= w < 16 ** (big + 1)
