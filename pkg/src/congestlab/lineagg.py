"""Running local aggregation protocols on the line graph.

Each edge ``{x, y}`` (``x < y``) is one node of L(G).  Its primary endpoint
``x`` holds the private state; both endpoints hold a mirror of its public
record.  One protocol round takes two engine rounds on G:

1. the secondary ``y`` folds over its other incident edges and sends the
   partial results to ``x`` (nothing if they are all identities);
2. the primary ``x`` folds over its own incident edges, joins in the
   secondary's partials, steps the protocol and sends the changed fields
   back to ``y``.

When an edge-vertex halts, ``x`` tells ``y`` with a one-bit notice in the
next even round, when the ``x -> y`` direction carries nothing else.

Only folds cross an edge, so per-edge traffic does not depend on degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Any, Callable, Iterable, Mapping

from .engine import Codec, EngineConfig, Message, NodeProcess, RunReport, run_protocol
from .graph import Graph, LineGraphMap, Matching, edge_id, line_graph
from .localagg import (
    AggregateFunction,
    AggregationProtocol,
    AggregationRun,
    fold_values,
    make_rng,
    run_aggregation,
    value_bits,
)
from .maxis import IN_IS, ColoringMaxIS, LayeredMaxIS, MISBlackBox, simple_coloring

__all__ = [
    "check_aggregate",
    "LineGraphRun",
    "simulate_on_line_graph",
    "explicit_line_run",
    "mwm_2approx",
]


def check_aggregate(f: Callable[[list], Any], samples: Iterable[Iterable], join: Callable | None = None) -> bool:
    """Empirical aggregate check on ``samples``.

    Order invariance: every permutation of a sample (all of them up to 7
    items, rotations and a reversal beyond) gives the same value.
    Partition law (when ``join`` is given): ``f(X) == join(f(X1), f(X2))``
    for every split of the sample into two parts.
    """
    for sample in samples:
        xs = list(sample)
        ref = f(list(xs))
        if len(xs) <= 7:
            orders = permutations(xs)
        else:
            orders = [xs[i:] + xs[:i] for i in range(len(xs))] + [xs[::-1]]
        for o in orders:
            if f(list(o)) != ref:
                return False
        if join is None:
            continue
        idx = range(len(xs))
        for r in range(len(xs) + 1):
            for part in combinations(idx, r):
                a = [xs[i] for i in part]
                b = [xs[i] for i in idx if i not in part]
                if join(f(a), f(b)) != ref:
                    return False
                if len(xs) > 10:
                    break
    return True


@dataclass
class LineGraphRun:
    outputs: dict  # line-graph vertex id -> output
    edge_outputs: dict  # EdgeId -> output
    report: RunReport
    protocol_rounds: int
    lmap: LineGraphMap
    snapshots: list[dict] = field(default_factory=list)
    states: dict = field(default_factory=dict)


class _Host(NodeProcess):
    def __init__(self, x, lmap: LineGraphMap, proto, codec, info, seed, W, record):
        self.x = x
        self.proto = proto
        self.codec = codec
        self.seed = seed
        self.W = W
        self.info = info
        self.record = record
        g = lmap.base
        # incident edge-vertices, with the far endpoint and whether x is primary
        self.inc = []
        for y in g.neighbors(x):
            e = lmap.vid[edge_id(x, y)]
            self.inc.append((e, y, x < y))
        self.vid_of = {y: e for e, y, _ in self.inc}
        self.lmap = lmap
        self.mirror: dict[int, dict] = {}
        self.state: dict[int, Any] = {}
        self.terminal: set[int] = set()
        self.out: dict[int, Any] = {}
        self.pending: list[tuple[int, int]] = []
        self.last_step = 0
        self.far_deg: dict[int, int] = {}

    def _init_edges(self, degs):
        lg = self.lmap.graph
        self.far_deg = dict(degs)
        for e, y, primary in self.inc:
            inf = {"n": lg.n, "W": self.W, "degree": len(self.inc) + degs[y] - 2}
            if self.info and e in self.info:
                inf.update(self.info[e])
            st, data = self.proto.init(e, lg.weight(e), inf)
            self.mirror[e] = data
            if primary:
                self.state[e] = st

    def _partial(self, t, e, names):
        """Fold over x's incident edges other than ``e``."""
        others = ((f, self.mirror[f]) for f, _, _ in self.inc if f != e)
        return fold_values(self.proto, names, t, e, self.mirror[e], others)

    def on_round(self, ctx, inbox):
        r = ctx.round
        if r == 1:
            for y in ctx.neighbors:
                ctx.send(y, Message("deg", (len(self.inc),), max(1, len(self.inc).bit_length())))
            if not self.inc:
                ctx.halt({})
            return
        proto = self.proto
        if r == 2:
            self._init_edges({y: msgs[0].payload[0] for y, msgs in inbox.items()})
        if r % 2 == 0:
            t = r // 2
            # apply mirrored updates from the primaries of last round
            if r > 2:
                for y, msgs in inbox.items():
                    e = self.vid_of[y]
                    for m in msgs:
                        self.mirror[e] = dict(self.mirror[e], **dict(m.payload))
            # the primary-to-secondary direction is idle in even rounds, so
            # halt notices for last round's terminal edges travel now
            for e, y in self.pending:
                ctx.send(y, Message("fin", (), 1))
            self.pending = []
            if len(self.terminal) == len(self.inc):
                ctx.halt(dict(self.out))
                return
            for e, y, primary in self.inc:
                if primary or e in self.terminal:
                    continue
                names = tuple(proto.needs(t, self.mirror[e]))
                part = self._partial(t, e, names)
                sent = tuple((k, v) for k, v in part.items() if v != proto.folds[k].agg.identity)
                if sent:
                    # the primary knows ``names`` too; flags only say which folds came
                    bits = (len(names) if len(names) > 1 else 0) + sum(value_bits(self.codec, proto.folds[k].agg.kind, v) for k, v in sent)
                    ctx.send(y, Message("fold", sent, bits))
            return
        t = (r - 1) // 2
        received = {}
        for y, msgs in inbox.items():
            e = self.vid_of[y]
            for m in msgs:
                if m.tag == "fin":
                    self.terminal.add(e)
                else:
                    received[e] = dict(m.payload)
        todo = [(e, y) for e, y, primary in self.inc if primary and e not in self.terminal]
        # all partial folds read the snapshot of round t - 1
        aggs = {}
        for e, y in todo:
            names = tuple(proto.needs(t, self.mirror[e]))
            mine = self._partial(t, e, names)
            theirs = received.get(e, {})
            aggs[e] = {k: proto.folds[k].agg.join(v, theirs[k]) if k in theirs else v for k, v in mine.items()}
        for e, y in todo:
            old = self.mirror[e]
            st, data, out = proto.step(t, e, self.state[e], old, aggs[e], make_rng(self.seed, e, t))
            self.state[e] = st
            self.last_step = t
            delta = {k: v for k, v in data.items() if old.get(k) != v}
            self.mirror[e] = data
            if out is not None:
                self.terminal.add(e)
                self.out[e] = out
                self.pending.append((e, y))
            if delta and self.record is not None:
                self.record.setdefault(t, {})[e] = dict(data)
            # a secondary with no other incident edge never folds over the mirror
            if delta and self.far_deg[y] > 1:
                bits = len(proto.fields) + sum(value_bits(self.codec, proto.fields[k], v) for k, v in delta.items())
                ctx.send(y, Message("upd", tuple(sorted(delta.items())), bits))
        if len(self.terminal) == len(self.inc) and not self.pending:
            ctx.halt(dict(self.out))


def simulate_on_line_graph(
    g: Graph,
    proto: AggregationProtocol,
    cfg: EngineConfig,
    *,
    info: Mapping[int, Mapping] | None = None,
    lmap: LineGraphMap | None = None,
    snapshots: bool = False,
) -> LineGraphRun:
    """Run ``proto`` on L(g) using only the edges of ``g``.

    Node weights of L(g) are the edge weights of ``g``.  The bandwidth cap
    and the audit refer to ``g``; protocol values are sized for L(g).
    """
    lmap = lmap or line_graph(g)
    lg = lmap.graph
    W = lg.max_weight
    proto.prepare(lg.n, W)
    codec = proto.codec(lg.n, W)
    record: dict | None = {} if snapshots else None
    hosts: dict[int, _Host] = {}

    def factory(x):
        h = _Host(x, lmap, proto, codec, info, cfg.seed, W, record)
        hosts[x] = h
        return h

    report = run_protocol(g, factory, cfg, W=W, codec=codec)
    outputs: dict[int, Any] = {}
    states: dict[int, Any] = {}
    for x, h in hosts.items():
        outputs.update(h.out)
        states.update(h.state)
    rounds = max((h.last_step for h in hosts.values()), default=0)
    snaps = []
    if record is not None:
        cur = {}
        for e in lg.nodes:
            inf = {"n": lg.n, "W": W, "degree": lg.degree(e)}
            if info and e in info:
                inf.update(info[e])
            cur[e] = proto.init(e, lg.weight(e), inf)[1]
        for t in range(1, rounds + 1):
            cur = dict(cur)
            cur.update(record.get(t, {}))
            snaps.append(cur)
    report.extra["protocol_rounds"] = rounds
    return LineGraphRun(
        outputs=outputs,
        edge_outputs={lmap.edges[e]: o for e, o in outputs.items()},
        report=report,
        protocol_rounds=rounds,
        lmap=lmap,
        snapshots=snaps,
        states=states,
    )


def explicit_line_run(
    g: Graph,
    proto: AggregationProtocol,
    cfg: EngineConfig,
    *,
    info: Mapping[int, Mapping] | None = None,
    snapshots: bool = False,
) -> AggregationRun:
    """Reference: run ``proto`` natively on the explicitly built L(g)."""
    lmap = line_graph(g)
    return run_aggregation(lmap.graph, proto, cfg, info=info, snapshots=snapshots)


def mwm_2approx(
    g: Graph,
    variant: str = "mis_based",
    cfg: EngineConfig | None = None,
    *,
    mis: MISBlackBox | None = None,
) -> tuple[Matching, RunReport]:
    """2-approximate maximum weight matching: MaxIS on L(g) via aggregation.

    ``variant`` is ``mis_based`` (layered, Luby) or ``coloring_based``.  The
    coloring variant first colors L(g) with :func:`simple_coloring`.
    """
    cfg = cfg or EngineConfig()
    lmap = line_graph(g)
    info = None
    if variant == "mis_based":
        proto: AggregationProtocol = LayeredMaxIS(mis)
    elif variant == "coloring_based":
        colors, _ = simple_coloring(lmap.graph)
        info = {e: {"color": c} for e, c in colors.items()}
        proto = ColoringMaxIS()
    else:
        raise ValueError(f"unknown variant {variant!r}")
    run = simulate_on_line_graph(g, proto, cfg, info=info, lmap=lmap)
    m = Matching(e for e, o in run.edge_outputs.items() if o == IN_IS)
    run.report.extra["variant"] = variant
    return m, run.report
