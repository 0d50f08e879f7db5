from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from congestlab.engine import EngineConfig
from congestlab.graph import Matching, build_graph, generate, line_graph, log2_ceil, validate_solution
from congestlab.lineagg import explicit_line_run, mwm_2approx, simulate_on_line_graph
from congestlab.maxis import ColoringMaxIS, LayeredMaxIS, simple_coloring
from congestlab.nmis import NearlyMaximalIS
from congestlab.oracles import brute_matching

from conftest import graphs


def weighted(edges, ew):
    nodes = {x for e in edges for x in e}
    return build_graph(edges, {v: 1 for v in nodes}, edge_weights=ew)


def test_p3_equivalence_example():
    g = weighted([(0, 1), (1, 2)], {(0, 1): 4, (1, 2): 9})
    a = simulate_on_line_graph(g, LayeredMaxIS(), EngineConfig(seed=1))
    b = explicit_line_run(g, LayeredMaxIS(), EngineConfig(seed=1))
    assert a.outputs == b.outputs
    assert a.edge_outputs[(1, 2)] == "InIS"


def test_star3_reduction_fold_is_one_message_each_way():
    g = weighted([(0, 1), (0, 2), (0, 3)], {(0, 1): 8, (0, 2): 4, (0, 3): 2})
    run = simulate_on_line_graph(g, LayeredMaxIS(), EngineConfig())
    # after the opening degree exchange every directed edge carries at most
    # one message per engine round
    for (r, u, v), bits in run.report.edge_bits.items():
        assert bits <= run.report.bandwidth_bits
    assert run.edge_outputs[(0, 1)] == "InIS"


def test_single_edge_needs_no_cross_traffic_after_setup():
    g = weighted([(0, 1)], {(0, 1): 3})
    run = simulate_on_line_graph(g, LayeredMaxIS(), EngineConfig())
    assert run.edge_outputs == {(0, 1): "InIS"}
    # round 1 trades degrees; afterwards only the one-bit halt notice crosses
    later = {k: b for k, b in run.report.edge_bits.items() if k[0] > 1}
    assert all(b == 1 for b in later.values())
    assert len(later) <= 1


def test_edgeless_graph_has_empty_line_graph():
    g = build_graph([], {0: 1, 1: 1})
    run = simulate_on_line_graph(g, LayeredMaxIS(), EngineConfig())
    assert run.outputs == {} and run.protocol_rounds == 0


def _protocols(g, seed):
    lm = line_graph(g)
    colors, _ = simple_coloring(lm.graph)
    info = {e: {"color": c} for e, c in colors.items()}
    return [(LayeredMaxIS, None), (ColoringMaxIS, info), (lambda: NearlyMaximalIS(4, 12), None)]


@given(graphs(max_n=8, edge_weights=True), st.integers(0, 2**32))
def test_simulation_equals_explicit_line_graph_run(g, seed):
    cfg = EngineConfig(seed=seed, max_rounds=20_000)
    for make, info in _protocols(g, seed):
        a = simulate_on_line_graph(g, make(), cfg, info=info, snapshots=True)
        b = explicit_line_run(g, make(), cfg, info=info, snapshots=True)
        assert a.outputs == b.outputs
        assert a.protocol_rounds == b.protocol_rounds
        assert a.snapshots == b.snapshots


@given(st.integers(1, 32), st.integers(0, 2**16))
def test_stars_stay_within_cap(k, seed):
    g = generate("star", k=k, seed=seed, weight_range=(1, (k + 1) ** 2), edge_weights=True)
    run = simulate_on_line_graph(g, LayeredMaxIS(), EngineConfig(seed=seed))
    assert run.report.bandwidth_bits == 4 * max(1, log2_ceil(g.n))
    assert run.report.violations == []


# 2-approximate weighted matching -------------------------------------------


def test_mwm_examples():
    tri = weighted([(0, 1), (1, 2), (0, 2)], {(0, 1): 5, (1, 2): 3, (0, 2): 3})
    m, _ = mwm_2approx(tri)
    assert m == Matching([(0, 1)])
    two = weighted([(0, 1), (2, 3)], {(0, 1): 10, (2, 3): 1})
    assert mwm_2approx(two)[0] == Matching([(0, 1), (2, 3)])
    p3 = weighted([(0, 1), (1, 2)], {(0, 1): 10, (1, 2): 1})
    assert mwm_2approx(p3)[0] == Matching([(0, 1)])
    star = weighted([(0, 1), (0, 2), (0, 3)], {(0, 1): 8, (0, 2): 4, (0, 3): 2})
    assert mwm_2approx(star)[0] == Matching([(0, 1)])
    single = weighted([(0, 1)], {(0, 1): 1})
    assert mwm_2approx(single)[0] == Matching([(0, 1)])
    p4 = weighted([(0, 1), (1, 2), (2, 3)], {(0, 1): 1, (1, 2): 1, (2, 3): 1})
    assert len(mwm_2approx(p4)[0]) >= 1


@given(graphs(max_n=9, edge_weights=True, max_m=24), st.sampled_from(["mis_based", "coloring_based"]), st.integers(0, 2**32))
def test_mwm_is_a_two_approximation(g, variant, seed):
    m, rep = mwm_2approx(g, variant, EngineConfig(seed=seed))
    check = validate_solution(g, m)
    assert check.valid
    assert 2 * check.weight >= brute_matching(g).value
    assert rep.extra["variant"] == variant
