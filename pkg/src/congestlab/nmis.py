"""Nearly-maximal independent sets and the (2+eps) matchings built on them.

Every live node ``v`` keeps a marking probability ``p(v) = K**-j(v)``,
starting at ``1/K``.  In each iteration it marks itself with probability
``p(v)``; a marked node with no marked live neighbor joins the set, and it
and its neighbors leave.  With effective degree ``d(v)`` (the sum of the
live neighbors' probabilities), ``p`` shrinks by ``K`` when ``d >= 2`` and
otherwise grows by ``K`` up to ``1/K``.  After ``T`` iterations the nodes
still undecided are reported as residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Mapping

from .engine import EngineConfig, RunReport, merge_reports
from .graph import Graph, IndependentSet, Matching, build_graph, edge_id, line_graph
from .lineagg import simulate_on_line_graph
from .localagg import ANY, AggregationProtocol, NeighborFold, capped_sum, run_aggregation
from .maxis import IN_IS, NOT_IN_IS

__all__ = [
    "RESIDUAL",
    "NmisParams",
    "NearlyMaximalIS",
    "nmis_rounds",
    "nmis_run",
    "mcm_2eps",
    "WeightBuckets",
    "mwm_2eps",
]

RESIDUAL = "residual"
MARK_STREAM = 2

ALIVE, GONE, JOINED = 0, 1, 2


def nmis_rounds(max_degree: int, K: int, delta: float, beta: float) -> int:
    """``ceil(beta * (log D / log K + K^2 ln(1/delta)))`` iterations."""
    logd = math.log(max_degree) if max_degree > 1 else 0.0
    return max(1, math.ceil(beta * (logd / math.log(K) + K * K * math.log(1.0 / delta))))


@dataclass(frozen=True)
class NmisParams:
    K: int = 4
    delta: float = 0.1
    beta: float = 10.0
    T: int | None = None
    trace: bool = False

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.T is not None and self.T < 1:
            raise ValueError("T must be >= 1")

    def iterations(self, max_degree: int) -> int:
        return self.T if self.T is not None else nmis_rounds(max_degree, self.K, self.delta, self.beta)


def _f_inis(t, v, d, u, du):
    return du["st"] == JOINED


def _f_marked(t, v, d, u, du):
    return du["st"] == ALIVE and du["mk"]


class NearlyMaximalIS(AggregationProtocol):
    """Three protocol rounds per iteration: leave, mark, join.

    ``coins(vid, iteration)`` may override a node's coin (``True``/``False``)
    or return ``None`` to use its own random stream.
    """

    fields = {"st": "small", "j": "small", "mk": "bool"}
    shared_init = frozenset({"st", "j", "mk"})

    def __init__(self, K: int, T: int, coins: Callable[[int, int], bool | None] | None = None, trace: bool = False):
        self.K = K
        self.T = T
        self.coins = coins
        self.trace = trace
        K_ = Fraction(K)
        self.folds = {
            "inis": NeighborFold(ANY, _f_inis),
            "mk": NeighborFold(ANY, _f_marked),
            "d": NeighborFold(capped_sum(Fraction(2)), lambda t, v, d, u, du: K_ ** -du["j"] if du["st"] == ALIVE else Fraction(0)),
        }

    def init(self, vid, weight, info):
        return {"jn": 1, "hist": []}, {"st": ALIVE, "j": 1, "mk": False}

    def needs(self, t, data):
        if data["st"] != ALIVE:
            return ()
        return (("inis",), ("d",), ("mk",))[(t - 1) % 3]

    def step(self, t, vid, state, data, agg, rng):
        i, k = divmod(t - 1, 3)
        if k == 0:
            if agg["inis"]:
                return state, dict(data, st=GONE), NOT_IN_IS
            if i >= self.T:
                return state, data, RESIDUAL
            return state, data, None
        if k == 1:
            d = agg["d"]
            j = data["j"]
            jn = j + 1 if d >= 2 else max(1, j - 1)
            coin = self.coins(vid, i) if self.coins is not None else None
            if coin is None:
                coin = bool(rng(MARK_STREAM).random() < self.K ** -j)
            state = dict(state, jn=jn)
            if self.trace:
                state["hist"] = state["hist"] + [(i, j, d, jn, coin)]
            return state, dict(data, mk=coin), None
        if data["mk"] and not agg["mk"]:
            return state, dict(data, st=JOINED), IN_IS
        return state, dict(data, j=state["jn"]), None


def nmis_run(g: Graph, params: NmisParams | None = None, seed: int = 0, *, cfg: EngineConfig | None = None, coins=None, snapshots: bool = False):
    """Returns ``(IndependentSet, residual set, RunReport)``.

    ``report.extra`` records ``T`` and, with ``params.trace``, the per-node
    history of ``(iteration, j, d, j_next, marked)``.
    """
    params = params or NmisParams()
    T = params.iterations(g.max_degree)
    cfg = replace(cfg, seed=seed, max_rounds=max(cfg.max_rounds, 3 * T + 10)) if cfg else EngineConfig(seed=seed, max_rounds=3 * T + 10)
    proto = NearlyMaximalIS(params.K, T, coins=coins, trace=params.trace)
    run = run_aggregation(g, proto, cfg, snapshots=snapshots)
    s = IndependentSet(v for v, o in run.outputs.items() if o == IN_IS)
    residual = {v for v, o in run.outputs.items() if o == RESIDUAL}
    rep = run.report
    rep.extra["T"] = T
    rep.extra["K"] = params.K
    if params.trace:
        rep.extra["history"] = {v: st["hist"] for v, st in run.states.items()}
    if snapshots:
        rep.extra["run"] = run
    return s, residual, rep


def mcm_2eps(
    g: Graph,
    eps: float = 0.5,
    seed: int = 0,
    *,
    K: int = 4,
    delta: float | None = None,
    beta: float = 1.0,
    cfg: EngineConfig | None = None,
) -> tuple[Matching, RunReport]:
    """(2+eps)-approximate maximum cardinality matching.

    Runs the nearly-maximal IS dynamics on L(g) through the line-graph
    simulator; edges left residual are dropped.  ``delta`` defaults to
    ``min(0.1, eps/5)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    delta = min(0.1, eps / 5) if delta is None else delta
    if g.m == 0:
        rep = RunReport(0, [], {}, seed, [], True)
        rep.extra.update({"T": 0, "residual_edges": []})
        return Matching(), rep

    lmap = line_graph(g)
    T = NmisParams(K=K, delta=delta, beta=beta).iterations(lmap.graph.max_degree)
    cfg = replace(cfg, seed=seed, max_rounds=max(cfg.max_rounds, 6 * T + 10)) if cfg else EngineConfig(seed=seed, max_rounds=6 * T + 10)
    run = simulate_on_line_graph(g, NearlyMaximalIS(K, T), cfg, lmap=lmap)
    m = Matching(e for e, o in run.edge_outputs.items() if o == IN_IS)
    rep = run.report
    rep.extra["T"] = T
    rep.extra["residual_edges"] = sorted(e for e, o in run.edge_outputs.items() if o == RESIDUAL)
    return m, rep


@dataclass(frozen=True)
class WeightBuckets:
    """Big buckets ``[base**i, base**(i+1))`` split by powers of ``1 + eps``."""

    eps: float
    base: int = 16

    def big(self, w: int) -> int:
        i = 0
        while self.base ** (i + 1) <= w:
            i += 1
        return i

    def small(self, w: int) -> int:
        lo = self.base ** self.big(w)
        s = 0
        r = 1.0 + self.eps
        while lo * r ** (s + 1) <= w:
            s += 1
        return s

    def key(self, w: int) -> tuple[int, int]:
        return self.big(w), self.small(w)


def _sub(g: Graph, edges) -> Graph:
    edges = sorted(edges)
    return build_graph(edges, {v: 1 for v in g.nodes})


def _constant_approx(g: Graph, weights: Mapping, eps: float, seed: int, buckets: WeightBuckets, reports: list, mcm_kw) -> Matching:
    """Bucketed black box: per big bucket descend small buckets, then keep
    each node's heaviest chosen edge."""
    by_big: dict[int, dict[int, list]] = {}
    for e, w in weights.items():
        b, s = buckets.key(w)
        by_big.setdefault(b, {}).setdefault(s, []).append(e)
    chosen: list = []
    call = 0
    for b in sorted(by_big):
        blocked: set[int] = set()
        for s in sorted(by_big[b], reverse=True):
            avail = [e for e in by_big[b][s] if e[0] not in blocked and e[1] not in blocked]
            if not avail:
                continue
            m, rep = mcm_2eps(_sub(g, avail), eps, seed * 1_000_003 + call, **mcm_kw)
            call += 1
            reports.append(rep)
            for e in m:
                blocked.update(e)
                chosen.append(e)
    best: dict[int, tuple] = {}
    for e in chosen:
        for x in e:
            if x not in best or (weights[e], e) > (weights[best[x]], best[x]):
                best[x] = e
    return Matching(e for e in chosen if best[e[0]] == e and best[e[1]] == e)


def mwm_2eps(
    g: Graph,
    eps: float = 0.5,
    seed: int = 0,
    *,
    base: int = 16,
    iterations: int | None = None,
    **mcm_kw,
) -> tuple[Matching, RunReport]:
    """(2+eps)-approximate maximum weight matching.

    (a) bucket edge weights, (b) run :func:`mcm_2eps` per small bucket from
    the top of each big bucket, (c) keep each node's heaviest chosen edge,
    (d) repeat ``ceil(2/eps)`` times: give every unmatched edge the gain of
    swapping it in, run (a) to (c) on positive gains and apply the swaps.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    buckets = WeightBuckets(eps, base)
    reports: list[RunReport] = []
    w = {e: g.edge_weight(*e) for e in g.edges}
    m = _constant_approx(g, w, eps, seed, buckets, reports, mcm_kw)
    history = [sum(w[e] for e in m)]
    iters = math.ceil(2 / eps) if iterations is None else iterations
    for it in range(iters):
        mate = m.mate()
        gain = {}
        for e in g.edges:
            if e in m:
                continue
            loss = sum(w[edge_id(x, mate[x])] for x in e if x in mate)
            if w[e] - loss > 0:
                gain[e] = w[e] - loss
        if not gain:
            break
        aug = _constant_approx(g, gain, eps, seed + 7919 * (it + 1), buckets, reports, mcm_kw)
        touched = {x for e in aug for x in e}
        m = Matching([e for e in m if e[0] not in touched and e[1] not in touched] + list(aug))
        history.append(sum(w[e] for e in m))
    rep = merge_reports(reports, seed) if reports else RunReport(0, [], {}, seed, [], True)
    rep.outputs = {}
    rep.extra["weight_history"] = history
    rep.extra["black_box_calls"] = len(reports)
    return m, rep
