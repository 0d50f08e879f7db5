from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from congestlab.engine import Codec, EngineConfig
from congestlab.graph import build_graph, generate
from congestlab.lineagg import check_aggregate
from congestlab.localagg import (
    ALL,
    ANY,
    MAX,
    MIN,
    PRIO_MIN,
    SUM,
    AggregationProtocol,
    NeighborFold,
    capped_sum,
    run_aggregation,
    value_bits,
)

from conftest import graphs


def _hood_max(t, v, d, u, du):
    return du["best"]


class SpreadMax(AggregationProtocol):
    """Every node learns the largest weight within ``radius`` hops."""

    fields = {"best": "weight", "tick": "small"}
    folds = {"mx": NeighborFold(MAX, _hood_max)}

    def __init__(self, radius, shared=False):
        self.radius = radius
        if shared:
            self.shared_init = frozenset({"tick"})

    def init(self, vid, weight, info):
        return {}, {"best": weight, "tick": 0}

    def needs(self, t, data):
        return ("mx",)

    def step(self, t, vid, state, data, agg, rng):
        best = max(data["best"], agg["mx"] if agg["mx"] is not None else 0)
        data = dict(data, best=best, tick=t % 2)
        return state, data, (best if t == self.radius else None)


def test_aggregate_laws_hold_for_builtin_joins():
    samples = [[3, 1, 2], [5], [], [7, 7, 1, 0, 2]]
    for agg in (SUM, MIN, MAX):
        assert check_aggregate(agg, samples, agg.join)
    bools = [[True, False], [False, False, False], [True]]
    assert check_aggregate(ANY, bools, ANY.join)
    assert check_aggregate(ALL, bools, ALL.join)
    prios = [[(3, 1), (3, 0), (1, 5)], [(0, 0)]]
    assert check_aggregate(PRIO_MIN, prios, PRIO_MIN.join)


def test_check_aggregate_rejects_order_dependent_functions():
    first = lambda xs: xs[0] if xs else None  # noqa: E731
    assert not check_aggregate(first, [[1, 2, 3]])


def test_check_aggregate_rejects_mean_under_partition():
    mean = lambda xs: Fraction(sum(xs), len(xs)) if xs else Fraction(0)  # noqa: E731
    join = lambda a, b: (a + b) / 2  # noqa: E731
    assert check_aggregate(mean, [[1, 2, 3]]) is True  # order invariant
    assert not check_aggregate(mean, [[1, 2, 3]], join)


@given(st.lists(st.fractions(min_value=0, max_value=3, max_denominator=16), max_size=6))
def test_capped_sum_is_an_aggregate(xs):
    agg = capped_sum(Fraction(2))
    assert check_aggregate(agg, [xs], agg.join)
    assert agg(xs) == min(Fraction(2), sum(xs, Fraction(0)))


def test_value_bits():
    c = Codec(16, 64, word_bits=4)
    assert value_bits(c, "weight", 9) == 6
    assert value_bits(c, "bool", True) == 1
    assert value_bits(c, "st", (3, None)) == 3
    assert value_bits(c, "st", (3, 5)) == 6
    assert value_bits(c, "lb", (1, 9)) == 6
    assert value_bits(c, "lb", (2, 0)) == 2
    assert value_bits(c, "prio", None) == 0
    assert value_bits(c, "prio", (3, 1)) == 8
    assert value_bits(c, "dyadic", Fraction(3, 4)) == 2 + 2 + 1


def test_spread_max_on_path():
    g = build_graph([(0, 1), (1, 2), (2, 3)], {0: 9, 1: 1, 2: 2, 3: 5})
    run = run_aggregation(g, SpreadMax(1), EngineConfig())
    assert run.outputs == {0: 9, 1: 9, 2: 5, 3: 5}
    assert run.protocol_rounds == 1
    run2 = run_aggregation(g, SpreadMax(3), EngineConfig())
    assert run2.outputs == {v: 9 for v in g.nodes}


@given(graphs(max_n=9), st.integers(1, 4))
def test_shared_initial_fields_change_bits_not_results(g, radius):
    a = run_aggregation(g, SpreadMax(radius), EngineConfig())
    b = run_aggregation(g, SpreadMax(radius, shared=True), EngineConfig())
    assert a.outputs == b.outputs
    assert a.protocol_rounds == b.protocol_rounds
    assert sum(b.report.edge_bits.values()) <= sum(a.report.edge_bits.values())


def test_snapshots_record_public_data_each_round():
    g = generate("path", n=4, weights={0: 9, 1: 1, 2: 2, 3: 5})
    run = run_aggregation(g, SpreadMax(2), EngineConfig(), snapshots=True)
    assert len(run.snapshots) == 2
    assert [run.snapshots[0][v]["best"] for v in g.nodes] == [9, 9, 5, 5]
    assert [run.snapshots[1][v]["best"] for v in g.nodes] == [9, 9, 9, 5]


def test_folds_only_see_neighbors():
    g = build_graph([(0, 1)], {0: 3, 1: 4, 2: 50})
    run = run_aggregation(g, SpreadMax(2), EngineConfig())
    assert run.outputs == {0: 4, 1: 4, 2: 50}


def test_protocol_needs_init_and_step():
    with pytest.raises(NotImplementedError):
        AggregationProtocol().init(0, 1, {})
