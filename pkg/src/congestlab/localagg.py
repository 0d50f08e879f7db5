"""Local aggregation protocols.

A local aggregation protocol keeps a small public record per node and reads
its neighborhood only through folds: each neighbor contributes one mapped
value and the values are combined with an associative, commutative join.
That restriction is what lets the same protocol run on a line graph without
paying for high line-graph degrees (see :mod:`congestlab.lineagg`).

The native runner here executes a protocol directly on a graph.  Engine
round 1 publishes the initial records (minus the fields every node starts
with the same value of); protocol round ``t`` runs in engine round ``t + 1``
and ships only the fields that changed.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Callable, Iterable, Mapping

from .engine import Codec, EngineConfig, Message, NodeProcess, RunReport, node_rng, run_protocol
from .graph import Graph

__all__ = [
    "AggregateFunction",
    "NeighborFold",
    "AggregationProtocol",
    "AggregationRun",
    "SUM",
    "ANY",
    "ALL",
    "MIN",
    "MAX",
    "PRIO_MIN",
    "capped_sum",
    "value_bits",
    "run_aggregation",
]


@dataclass(frozen=True)
class AggregateFunction:
    """A join with an identity; ``kind`` is the wire kind of partial results."""

    name: str
    join: Callable[[Any, Any], Any]
    identity: Any
    kind: str

    def __call__(self, values: Iterable) -> Any:
        return reduce(self.join, values, self.identity)


def _min_join(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a if a <= b else b


def _max_join(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a if a >= b else b


SUM = AggregateFunction("sum", operator.add, 0, "sum")
ANY = AggregateFunction("or", operator.or_, False, "bool")
ALL = AggregateFunction("and", operator.and_, True, "bool")
MIN = AggregateFunction("min", _min_join, None, "int")
MAX = AggregateFunction("max", _max_join, None, "int")
#: minimum over ``(word, id)`` priorities
PRIO_MIN = AggregateFunction("min-prio", _min_join, None, "prio")


def capped_sum(cap) -> AggregateFunction:
    """Sum saturating at ``cap``; associative for non-negative inputs."""
    return AggregateFunction(f"sum<={cap}", lambda a, b: min(cap, a + b), Fraction(0), "dyadic")


def value_bits(codec: Codec, kind: str, value) -> int:
    """Wire size of one value; tuples cost the sum of their parts."""
    if kind == "dyadic":
        # mantissa plus exponent of a non-negative rational with power-of-two-ish denominator
        v = Fraction(value)
        return v.numerator.bit_length() + v.denominator.bit_length().bit_length() + 1
    if kind == "st":
        code, ci = value
        # the code says whether an index follows
        return 3 + (max(1, int(ci).bit_length()) if ci is not None else 0)
    if kind == "lb":
        state, word = value
        return 2 + (codec.word_bits if state == 1 else 0)
    if kind == "prio":
        return 0 if value is None else codec.word_bits + codec.id_bits
    if kind == "small":
        return max(1, int(value).bit_length())
    if kind == "color":
        return max(1, int(value).bit_length())
    if value is None:
        return 0
    return codec.size(kind, value)


@dataclass(frozen=True)
class NeighborFold:
    """``agg`` applied to ``map(t, vid, data, nbr_vid, nbr_data)`` over all neighbors."""

    agg: AggregateFunction
    map: Callable[[int, int, Mapping, int, Mapping], Any]


class AggregationProtocol:
    """Base class.

    Subclasses set ``fields`` (public field name to wire kind) and
    ``folds`` (fold name to :class:`NeighborFold`) and implement
    :meth:`init` and :meth:`step`.  ``init`` must be deterministic.  Private
    state never leaves the node; only ``data`` is visible to neighbors.
    """

    fields: Mapping[str, str] = {}
    folds: Mapping[str, NeighborFold] = {}
    #: fields whose initial value is the same at every node; they are not
    #: sent in the opening broadcast, receivers copy their own
    shared_init: frozenset = frozenset()

    def prepare(self, n: int, W: int) -> None:
        """Called once per run with the size of the graph the protocol sees."""

    def codec(self, n: int, W: int) -> Codec:
        return Codec(n, W)

    def init(self, vid: int, weight: int, info: Mapping) -> tuple[Any, dict]:
        raise NotImplementedError

    def needs(self, t: int, data: Mapping) -> Iterable[str]:
        """Fold names consulted at protocol round ``t``; default all."""
        return self.folds.keys()

    def step(self, t, vid, state, data, agg, rng) -> tuple[Any, dict, Any]:
        """Return ``(state, data, output)``; a non-None output halts the node."""
        raise NotImplementedError


@dataclass
class AggregationRun:
    outputs: dict
    report: RunReport
    protocol_rounds: int
    snapshots: list[dict] = field(default_factory=list)
    states: dict = field(default_factory=dict)


def make_rng(seed: int, vid: int, t: int):
    """Per-(node, protocol round) generator factory handed to ``step``."""

    def rng(stream: int = 0, index: int | None = None):
        return node_rng(seed, stream, vid, t if index is None else index)

    return rng


def delta_bits(codec: Codec, fields: Mapping[str, str], delta: Mapping) -> int:
    return len(fields) + sum(value_bits(codec, fields[k], v) for k, v in delta.items())


def full_bits(codec: Codec, fields: Mapping[str, str], data: Mapping) -> int:
    return sum(value_bits(codec, fields[k], v) for k, v in data.items())


def fold_values(proto: AggregationProtocol, names, t, vid, data, nbrs) -> dict:
    """Evaluate the named folds over ``nbrs`` (an iterable of (id, data))."""
    out = {}
    nbrs = list(nbrs)
    for name in names:
        f = proto.folds[name]
        acc = f.agg.identity
        join, mp = f.agg.join, f.map
        for u, du in nbrs:
            acc = join(acc, mp(t, vid, data, u, du))
        out[name] = acc
    return out


class _NativeNode(NodeProcess):
    def __init__(self, proto, vid, weight, info, seed, codec, record):
        self.proto = proto
        self.vid = vid
        self.seed = seed
        self.codec = codec
        self.state, self.data = proto.init(vid, weight, info)
        self.nbr: dict[int, dict] = {}
        self.record = record

    def on_round(self, ctx, inbox):
        for u, msgs in inbox.items():
            for m in msgs:
                self.nbr.setdefault(u, {}).update(m.payload)
        if ctx.round == 1:
            opening = {k: v for k, v in self.data.items() if k not in self.proto.shared_init}
            if ctx.degree and opening:
                ctx.broadcast(Message("D", tuple(opening.items()), full_bits(self.codec, self.proto.fields, opening)))
            return
        if ctx.round == 2:
            for u in ctx.neighbors:
                rec = self.nbr.setdefault(u, {})
                for k in self.proto.shared_init:
                    rec.setdefault(k, self.data[k])
        t = ctx.round - 1
        proto = self.proto
        names = tuple(proto.needs(t, self.data))
        agg = fold_values(proto, names, t, self.vid, self.data, ((u, self.nbr[u]) for u in ctx.neighbors))
        state, data, out = proto.step(t, self.vid, self.state, self.data, agg, make_rng(self.seed, self.vid, t))
        delta = {k: v for k, v in data.items() if self.data.get(k) != v}
        self.state, self.data = state, data
        if delta and ctx.degree:
            ctx.broadcast(Message("D", tuple(sorted(delta.items())), delta_bits(self.codec, proto.fields, delta)))
        if self.record is not None and delta:
            self.record.setdefault(t, {})[self.vid] = dict(data)
        if out is not None:
            ctx.halt(out)


def run_aggregation(
    g: Graph,
    proto: AggregationProtocol,
    cfg: EngineConfig,
    *,
    info: Mapping[int, Mapping] | None = None,
    W: int | None = None,
    snapshots: bool = False,
) -> AggregationRun:
    """Execute ``proto`` natively on ``g``.

    ``info[v]`` is passed to ``init`` (``n``, ``W`` and ``degree`` are always
    filled in).  With ``snapshots`` the public record of every node after
    every protocol round is returned; nodes that halted keep their last
    record.
    """
    W = W if W is not None else g.max_weight
    proto.prepare(g.n, W)
    codec = proto.codec(g.n, W)
    record: dict | None = {} if snapshots else None
    nodes: dict[int, _NativeNode] = {}

    def factory(v):
        node = _NativeNode(proto, v, g.weight(v), _info(g, W, info, v), cfg.seed, codec, record)
        nodes[v] = node
        return node

    report = run_protocol(g, factory, cfg, W=W, codec=codec)
    rounds = max(0, report.rounds_used - 1)
    snaps = []
    if record is not None:
        # start from the initial records and overlay each round's updates
        cur = {v: dict(proto.init(v, g.weight(v), _info(g, W, info, v))[1]) for v in g.nodes}
        for t in range(1, rounds + 1):
            cur = {v: dict(d) for v, d in cur.items()}
            for v, d in record.get(t, {}).items():
                cur[v] = d
            snaps.append(cur)
    report.extra["protocol_rounds"] = rounds
    return AggregationRun(
        outputs=dict(report.outputs),
        report=report,
        protocol_rounds=rounds,
        snapshots=snaps,
        states={v: node.state for v, node in nodes.items()},
    )


def _info(g, W, info, v):
    inf = {"n": g.n, "W": W, "degree": g.degree(v)}
    if info and v in info:
        inf.update(info[v])
    return inf
