"""Round-synchronous executor for per-node protocols.

Every node runs a :class:`NodeProcess`.  In round ``r`` a node sees the
messages its neighbors sent in round ``r - 1`` and nothing else; it may send
messages and may halt with a terminal output.  A halting node's messages of
that same round are still delivered, after which it is silent.

Bits are accounted per directed edge and per round.  Under the CONGEST
model the per-edge total is compared against ``c * ceil(log2 n)``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

from .graph import Graph

__all__ = [
    "Message",
    "Codec",
    "NodeProcess",
    "NodeContext",
    "EngineConfig",
    "RunReport",
    "run_protocol",
    "congestion_audit",
    "node_rng",
    "TAG_BITS",
]

#: Bits charged for the message tag (a small enum).
TAG_BITS = 3


def node_rng(seed: int, stream: int, node: int, rnd: int) -> np.random.Generator:
    """Counter-based generator for one (seed, stream, node, round) cell.

    The stream is a pure function of its key, so results do not depend on
    which nodes ran first or on which thread.
    """
    key = int(seed) % 2**64
    return np.random.Generator(
        np.random.Philox(key=key, counter=[0, int(stream) % 2**64, int(node) % 2**64, int(rnd) % 2**64])
    )


class Codec:
    """Bit widths of the value kinds protocols put on the wire.

    ``id``: ceil(log2 n); ``weight``: ceil(log2 W), since a weight in
    1..W travels as ``w - 1``; ``bool``: 1;
    ``int``: two's-complement length of the value; ``word``: ``word_bits``;
    ``real``: ``real_bits``; ``sum``: a weight plus log2 n carry bits.
    """

    def __init__(self, n: int, W: int = 1, word_bits: int | None = None, real_bits: int = 64):
        self.n = max(int(n), 1)
        self.W = max(int(W), 1)
        self.id_bits = max(1, math.ceil(math.log2(self.n)))
        self.weight_bits = max(1, math.ceil(math.log2(self.W)))
        self.word_bits = word_bits if word_bits is not None else 2 * self.id_bits
        self.real_bits = real_bits

    def size(self, kind: str, value: Any = None) -> int:
        if kind == "id":
            return self.id_bits
        if kind == "weight":
            return self.weight_bits
        if kind == "bool":
            return 1
        if kind == "int":
            return int(value).bit_length() + 1
        if kind == "word":
            return self.word_bits
        if kind == "real":
            return self.real_bits
        if kind == "sum":
            return self.weight_bits + self.id_bits
        if kind == "none":
            return 0
        raise ValueError(f"unknown bit kind {kind!r}")


@dataclass(frozen=True)
class Message:
    tag: str
    payload: tuple = ()
    bits: int = 0


class NodeProcess:
    """Base class for per-node state machines.

    Subclasses override :meth:`on_round`.  ``inbox`` maps neighbor id to the
    tuple of messages it sent on that edge last round (only non-empty
    entries are present).
    """

    def on_round(self, ctx: "NodeContext", inbox: dict[int, tuple[Message, ...]]) -> None:
        raise NotImplementedError


class NodeContext:
    """Everything a node may touch: its own id, degree, weight and outbox."""

    __slots__ = ("id", "neighbors", "degree", "weight", "n", "W", "round", "codec", "_seed", "_out", "_halted", "_output")

    def __init__(self, vid, neighbors, weight, n, W, codec, seed):
        self.id = vid
        self.neighbors = neighbors
        self.degree = len(neighbors)
        self.weight = weight
        self.n = n
        self.W = W
        self.codec = codec
        self.round = 0
        self._seed = seed
        self._out: list[tuple[int, Message]] = []
        self._halted = False
        self._output = None

    def rng(self, stream: int = 0) -> np.random.Generator:
        return node_rng(self._seed, stream, self.id, self.round)

    def message(self, tag: str, *fields: tuple[str, Any]) -> Message:
        """Build a message from ``(kind, value)`` pairs, computing its size."""
        bits = TAG_BITS + sum(self.codec.size(k, v) for k, v in fields)
        return Message(tag, tuple(v for _, v in fields), bits)

    def send(self, nbr: int, msg: Message) -> None:
        self._out.append((nbr, msg))

    def broadcast(self, msg: Message) -> None:
        for u in self.neighbors:
            self._out.append((u, msg))

    def halt(self, output: Any) -> None:
        self._halted = True
        self._output = output


@dataclass(frozen=True)
class EngineConfig:
    """Model, bandwidth multiplier ``c``, round budget and seed.

    ``workers > 1`` runs node handlers of a round on a thread pool; the
    result is identical to serial execution.
    """

    model: str = "congest"
    bandwidth_mult: int = 4
    max_rounds: int = 10_000
    seed: int = 0
    workers: int = 1
    trace: bool = False

    def __post_init__(self):
        if self.model not in ("congest", "local"):
            raise ValueError(f"model must be 'congest' or 'local', got {self.model!r}")
        if self.bandwidth_mult < 1:
            raise ValueError("bandwidth_mult must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be > 0")

    def bandwidth_bits(self, n: int) -> int:
        return self.bandwidth_mult * max(1, math.ceil(math.log2(max(n, 2))))


@dataclass
class RunReport:
    rounds_used: int
    per_round_max_bits: list[int]
    outputs: dict
    seed: int
    violations: list[tuple[int, tuple[int, int], int]]
    terminated: bool
    edge_bits: dict[tuple[int, int, int], int] = field(default_factory=dict)
    model: str = "congest"
    bandwidth_bits: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rounds_used": self.rounds_used,
            "per_round_max_bits": list(self.per_round_max_bits),
            "outputs": {str(k): _jsonable(v) for k, v in sorted(self.outputs.items())},
            "seed": self.seed,
            "violations": [[r, list(e), b] for r, e, b in self.violations],
            "terminated": self.terminated,
            "model": self.model,
            "bandwidth_bits": self.bandwidth_bits,
            "max_edge_bits": max(self.per_round_max_bits, default=0),
            "extra": _jsonable(self.extra),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in sorted(x.items(), key=lambda kv: str(kv[0]))}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return [_jsonable(v) for v in sorted(x)]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, int):
        return f"{x.numerator}/{x.denominator}"
    return x


def run_protocol(
    g: Graph,
    factory: Callable[[int], NodeProcess],
    cfg: EngineConfig,
    *,
    W: int | None = None,
    codec: Codec | None = None,
) -> RunReport:
    """Run ``factory(v)`` at every node of ``g`` until all halt or the budget ends."""
    n = g.n
    W = W if W is not None else g.max_weight
    codec = codec or Codec(n, W)
    procs = {v: factory(v) for v in g.nodes}
    ctxs = {v: NodeContext(v, g.neighbors(v), g.weight(v), n, W, codec, cfg.seed) for v in g.nodes}
    cap = cfg.bandwidth_bits(n) if cfg.model == "congest" else None

    live = list(g.nodes)
    outputs: dict[int, Any] = {}
    per_round_max: list[int] = []
    edge_bits: dict[tuple[int, int, int], int] = {}
    violations: list[tuple[int, tuple[int, int], int]] = []
    inboxes: dict[int, dict[int, list[Message]]] = {v: {} for v in g.nodes}
    rnd = 0
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None

    def step(v):
        ctx = ctxs[v]
        ctx.round = rnd
        ctx._out = []
        box = inboxes[v]
        procs[v].on_round(ctx, {u: tuple(ms) for u, ms in box.items()})

    try:
        while live and rnd < cfg.max_rounds:
            rnd += 1
            if pool is not None:
                list(pool.map(step, live))
            else:
                for v in live:
                    step(v)
            new_inboxes: dict[int, dict[int, list[Message]]] = {v: {} for v in g.nodes}
            bits_this_round: dict[tuple[int, int], int] = {}
            still = []
            for v in live:
                ctx = ctxs[v]
                for u, msg in ctx._out:
                    if not g.has_edge(v, u):
                        raise ValueError(f"node {v} sent to non-neighbor {u} in round {rnd}")
                    new_inboxes[u].setdefault(v, []).append(msg)
                    key = (v, u)
                    bits_this_round[key] = bits_this_round.get(key, 0) + msg.bits
                if ctx._halted:
                    outputs[v] = ctx._output
                else:
                    still.append(v)
            for (v, u), b in sorted(bits_this_round.items()):
                edge_bits[(rnd, v, u)] = b
                if cap is not None and b > cap:
                    violations.append((rnd, (v, u), b))
            per_round_max.append(max(bits_this_round.values(), default=0))
            inboxes = new_inboxes
            live = still
    finally:
        if pool is not None:
            pool.shutdown()

    return RunReport(
        rounds_used=rnd,
        per_round_max_bits=per_round_max,
        outputs=outputs,
        seed=cfg.seed,
        violations=violations,
        terminated=not live,
        edge_bits=edge_bits,
        model=cfg.model,
        bandwidth_bits=cap,
    )


def congestion_audit(report: RunReport, bandwidth_bits: int) -> list[tuple[int, tuple[int, int], int]]:
    """Every (round, directed edge, bits) whose total exceeds ``bandwidth_bits``."""
    return [(r, (u, v), b) for (r, u, v), b in sorted(report.edge_bits.items()) if b > bandwidth_bits]


def merge_reports(reports: Iterable[RunReport], seed: int) -> RunReport:
    """Concatenate sequential sub-runs into one report (rounds are offset)."""
    per_round: list[int] = []
    edge_bits = {}
    violations = []
    outputs = {}
    terminated = True
    model = "congest"
    cap = None
    offset = 0
    for rep in reports:
        per_round.extend(rep.per_round_max_bits)
        for (r, u, v), b in rep.edge_bits.items():
            edge_bits[(r + offset, u, v)] = b
        violations.extend((r + offset, e, b) for r, e, b in rep.violations)
        outputs.update(rep.outputs)
        terminated = terminated and rep.terminated
        model = rep.model
        cap = rep.bandwidth_bits if cap is None else cap
        offset += rep.rounds_used
    return RunReport(offset, per_round, outputs, seed, violations, terminated, edge_bits, model, cap)
