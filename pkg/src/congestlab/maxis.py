"""Local-ratio approximations for maximum weight independent set.

Three algorithms share one idea: pick an independent set ``U``, subtract
each ``u``'s weight from its neighbors, solve what is left, then add back
every ``u`` with no neighbor in that solution.  The result is within a
factor ``Delta`` of the optimum.

* :func:`seq_local_ratio`: the sequential meta-algorithm with a pluggable
  selector.
* :func:`dist_maxis`: layered distributed version; nodes are grouped by
  ``ceil(log2 w)`` and only the locally topmost layer runs an MIS.
* :func:`coloring_maxis`: a proper coloring picks ``U`` as local color
  maxima, one color class per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .engine import Codec, EngineConfig, NodeProcess, RunReport, run_protocol
from .graph import Graph, IndependentSet, edge_id
from .localagg import ANY, PRIO_MIN, SUM, AggregationProtocol, AggregationRun, NeighborFold, run_aggregation

__all__ = [
    "IN_IS",
    "NOT_IN_IS",
    "layer_of",
    "seq_local_ratio",
    "LRStep",
    "sequence_selector",
    "heaviest_selector",
    "MISBlackBox",
    "LubyMIS",
    "IdMIS",
    "LubyProtocol",
    "LayeredMaxIS",
    "ColoringMaxIS",
    "luby_mis",
    "dist_maxis",
    "simple_coloring",
    "coloring_maxis",
    "joiner_sets",
    "layer_drain",
]

IN_IS = "InIS"
NOT_IN_IS = "NotInIS"

# status codes published in the ``st`` field
ACTIVE, READY, PART, CAND, OUT, IN = range(6)
LIVE = (ACTIVE, READY, PART)
# Luby sub-states published in the ``lb`` field
IDLE, UNDEC, JOINED, COVERED = range(4)

LUBY_STREAM = 1


def layer_of(w: int) -> int:
    """``ceil(log2 w)``, so that ``2**(l-1) < w <= 2**l``."""
    if w <= 0:
        raise ValueError(f"layer undefined for non-positive weight {w}")
    return (int(w) - 1).bit_length()


# --------------------------------------------------------------------------
# sequential meta-algorithm


@dataclass(frozen=True)
class LRStep:
    """One recursion level: weights before, chosen set, and the split."""

    depth: int
    weights: dict
    chosen: frozenset
    reduced: dict  # w1: weights passed to the recursion
    residual: dict  # w2 = w - w1


def seq_local_ratio(
    g: Graph,
    selector: Callable[[Graph, Mapping[int, int], int], Iterable[int]],
    trace: list | None = None,
) -> IndependentSet:
    """Sequential local ratio.

    ``selector(g, w, depth)`` returns an independent set among the nodes
    of positive weight ``w``.  Reductions from several chosen neighbors add
    up, and chosen nodes drop to weight zero.
    """
    w = {v: g.weight(v) for v in g.nodes}
    levels: list[frozenset] = []
    depth = 0
    while True:
        alive = [v for v in g.nodes if w[v] > 0]
        if not alive:
            break
        sub = g.induced(alive)
        U = frozenset(selector(sub, {v: w[v] for v in alive}, depth))
        if not U:
            raise ValueError(f"selector returned an empty set at depth {depth} with {len(alive)} nodes left")
        for u in U:
            if u not in sub:
                raise ValueError(f"selector picked {u}, which is not a live node")
            for x in sub.neighbors(u):
                if x in U:
                    raise ValueError(f"selector returned a dependent set: {edge_id(u, x)} inside")
        w1 = dict(w)
        for u in U:
            w1[u] = 0
            for x in sub.neighbors(u):
                w1[x] -= w[u]
        if trace is not None:
            live = set(alive)
            trace.append(
                LRStep(
                    depth,
                    {v: w[v] for v in alive},
                    U,
                    {v: w1[v] for v in alive},
                    {v: w[v] - w1[v] for v in alive if v in live},
                )
            )
        levels.append(U)
        w = w1
        depth += 1
    R: set[int] = set()
    for U in reversed(levels):
        R |= {u for u in U if not any(x in R for x in g.neighbors(u))}
    return IndependentSet(R)


def sequence_selector(sets: Sequence[Iterable[int]]):
    """Selector replaying a fixed list of sets, one per recursion level."""
    frozen = [frozenset(s) for s in sets]

    def select(g, w, depth):
        if depth >= len(frozen):
            raise ValueError(f"selector schedule exhausted at depth {depth}")
        return frozen[depth]

    return select


def heaviest_selector(g: Graph, w: Mapping[int, int], depth: int) -> set[int]:
    """Nodes heavier than all neighbors (ties to the larger id)."""
    return {v for v in g.nodes if all((w[v], v) > (w[u], u) for u in g.neighbors(v))}


# --------------------------------------------------------------------------
# MIS black boxes


class MISBlackBox:
    """Priority source for a Luby-style MIS run with a fixed phase budget.

    A node joins when its ``(word, id)`` pair is the smallest among
    undecided neighbors.  ``budget(n)`` is the number of phases each
    invocation gets.
    """

    name = "mis"

    def budget(self, n: int) -> int:
        raise NotImplementedError

    def word(self, rng, vid: int, index: int, bits: int) -> int:
        raise NotImplementedError


class LubyMIS(MISBlackBox):
    """Random words; phases default to ``2 ceil(log2 n) + 4``."""

    name = "luby"

    def __init__(self, phases: int | None = None):
        self.phases = phases

    def budget(self, n: int) -> int:
        if self.phases is not None:
            return self.phases
        return 2 * max(1, math.ceil(math.log2(max(n, 2)))) + 4

    def word(self, rng, vid, index, bits):
        return int(rng(LUBY_STREAM, index).integers(0, 2**bits))


class IdMIS(MISBlackBox):
    """Deterministic: priority by id alone, so local id-minima join first."""

    name = "id"

    def __init__(self, phases: int | None = None):
        self.phases = phases

    def budget(self, n: int) -> int:
        return self.phases if self.phases is not None else max(n, 1)

    def word(self, rng, vid, index, bits):
        return 0


def _mis_codec(n, W):
    c = Codec(n, W)
    return Codec(n, W, word_bits=c.id_bits)


# --------------------------------------------------------------------------
# standalone Luby


class LubyProtocol(AggregationProtocol):
    """Luby's MIS: two protocol rounds per phase (draw, then join)."""

    fields = {"lb": "lb"}
    shared_init = frozenset({"lb"})
    folds = {
        "cov": NeighborFold(ANY, lambda t, v, d, u, du: du["lb"][0] == JOINED),
        "prio": NeighborFold(PRIO_MIN, lambda t, v, d, u, du: (du["lb"][1], u) if du["lb"][0] == UNDEC else None),
    }

    def __init__(self, mis: MISBlackBox | None = None):
        self.mis = mis or LubyMIS()

    codec = staticmethod(_mis_codec)

    def prepare(self, n, W):
        self.bits = _mis_codec(n, W).word_bits

    def init(self, vid, weight, info):
        return {"word": 0}, {"lb": (IDLE, 0)}

    def needs(self, t, data):
        return ("cov",) if t % 2 == 1 else ("prio",)

    def step(self, t, vid, state, data, agg, rng):
        phase = (t - 1) // 2
        if t % 2 == 1:
            if agg["cov"]:
                return state, {"lb": (COVERED, 0)}, NOT_IN_IS
            state = dict(state, word=self.mis.word(rng, vid, phase, self.bits))
            return state, {"lb": (UNDEC, state["word"])}, None
        p = agg["prio"]
        if p is None or (state["word"], vid) < p:
            return state, {"lb": (JOINED, 0)}, IN_IS
        return state, data, None


def luby_mis(g: Graph, seed: int = 0, cfg: EngineConfig | None = None, mis: MISBlackBox | None = None):
    """Run Luby's MIS; returns ``(IndependentSet, phases, RunReport)``."""
    cfg = cfg or EngineConfig(seed=seed)
    if cfg.seed != seed:
        cfg = EngineConfig(cfg.model, cfg.bandwidth_mult, cfg.max_rounds, seed, cfg.workers, cfg.trace)
    run = run_aggregation(g, LubyProtocol(mis), cfg)
    s = IndependentSet(v for v, o in run.outputs.items() if o == IN_IS)
    phases = (run.protocol_rounds + 1) // 2
    run.report.extra["phases"] = phases
    return s, phases, run.report


# --------------------------------------------------------------------------
# layered distributed algorithm


def _live(du):
    return du["st"][0] in LIVE


def _f_red(t, v, d, u, du):
    st = du["st"]
    return du["w"] if st[0] == PART and du["lb"][0] == JOINED else 0


def _f_hi(t, v, d, u, du):
    return _live(du) and layer_of(du["w"]) > layer_of(d["w"])


def _f_notready(t, v, d, u, du):
    return du["st"][0] in LIVE and du["st"][0] != READY and layer_of(du["w"]) == layer_of(d["w"])


def _f_cov(t, v, d, u, du):
    return du["st"][0] == PART and du["lb"][0] == JOINED


def _f_prio(t, v, d, u, du):
    return (du["lb"][1], u) if du["st"][0] == PART and du["lb"][0] == UNDEC else None


def _f_inis(t, v, d, u, du):
    return du["st"][0] == IN


def _f_block(t, v, d, u, du):
    code, ci = du["st"]
    return code in LIVE or (code == CAND and ci > d["st"][1])


_ADDITION_FOLDS = {
    "inis": NeighborFold(ANY, _f_inis),
    "block": NeighborFold(ANY, _f_block),
}


def _addition_step(agg, state, data):
    """Shared addition stage: later candidates take precedence."""
    if agg["inis"]:
        return state, dict(data, st=(OUT, None)), NOT_IN_IS
    if not agg["block"]:
        return state, dict(data, st=(IN, None)), IN_IS
    return state, data, None


class LayeredMaxIS(AggregationProtocol):
    """Layered local-ratio MaxIS with an MIS black box.

    Each iteration spans ``3 + 2B`` protocol rounds:

    * ``k = 0``: apply reductions from last iteration's MIS; its members
      become candidates, nodes at weight <= 0 leave with ``NotInIS``;
    * ``k = 1``: ready iff no live neighbor is in a higher layer;
    * ``k = 2``: participate iff ready and every same-layer live neighbor
      is ready;
    * ``k = 3 + 2j`` / ``4 + 2j``: Luby phase ``j`` (draw, join) among
      participants.

    Candidates decide at any round: ``NotInIS`` if a neighbor is in the
    set, ``InIS`` once no live neighbor and no later candidate remains.
    """

    fields = {"w": "weight", "st": "st", "lb": "lb"}
    shared_init = frozenset({"st", "lb"})
    folds = {
        "red": NeighborFold(SUM, _f_red),
        "hi": NeighborFold(ANY, _f_hi),
        "nr": NeighborFold(ANY, _f_notready),
        "cov": NeighborFold(ANY, _f_cov),
        "prio": NeighborFold(PRIO_MIN, _f_prio),
        **_ADDITION_FOLDS,
    }

    def __init__(self, mis: MISBlackBox | None = None):
        self.mis = mis or LubyMIS()

    codec = staticmethod(_mis_codec)

    def period(self, n: int) -> int:
        return 3 + 2 * self.mis.budget(n)

    def prepare(self, n, W):
        self.B = self.mis.budget(n)
        self.S = 3 + 2 * self.B
        self.bits = _mis_codec(n, W).word_bits

    def init(self, vid, weight, info):
        state = {"w": weight, "ls": IDLE, "word": 0, "ci": None, "left": None}
        return state, {"w": weight, "st": (ACTIVE, None), "lb": (IDLE, 0)}

    def needs(self, t, data):
        code = data["st"][0]
        if code == CAND:
            return ("inis", "block")
        if code not in LIVE:
            return ()
        k = (t - 1) % self.S
        if k == 0:
            return ("red",)
        if k == 1:
            return ("hi",)
        if k == 2:
            return ("nr",)
        return ("cov",) if k % 2 == 1 else ("prio",)

    def step(self, t, vid, state, data, agg, rng):
        code = data["st"][0]
        if code == CAND:
            return _addition_step(agg, state, data)
        k = (t - 1) % self.S
        i = (t - 1) // self.S
        if k == 0:
            if code == PART and state["ls"] == JOINED:
                state = dict(state, ci=i - 1, left=t)
                return state, dict(data, st=(CAND, i - 1)), None
            red = agg["red"]
            if red:
                w = state["w"] - red
                state = dict(state, w=w)
                if w <= 0:
                    state["left"] = t
                    return state, dict(data, st=(OUT, None)), NOT_IN_IS
                return state, dict(data, w=w), None
            return state, data, None
        if k == 1:
            return state, dict(data, st=((ACTIVE if agg["hi"] else READY), None)), None
        if k == 2:
            if code == READY and not agg["nr"]:
                state = dict(state, ls=UNDEC)
                return state, dict(data, st=(PART, None)), None
            return state, data, None
        if code != PART or state["ls"] != UNDEC:
            return state, data, None
        j = (k - 3) // 2
        if k % 2 == 1:
            if agg["cov"]:
                state = dict(state, ls=COVERED)
                return state, dict(data, lb=(COVERED, 0)), None
            word = self.mis.word(rng, vid, i * self.B + j, self.bits)
            state = dict(state, word=word)
            return state, dict(data, lb=(UNDEC, word)), None
        p = agg["prio"]
        if p is None or (state["word"], vid) < p:
            state = dict(state, ls=JOINED)
            return state, dict(data, lb=(JOINED, 0)), None
        return state, data, None


def dist_maxis(
    g: Graph,
    mis: MISBlackBox | None = None,
    cfg: EngineConfig | None = None,
    *,
    snapshots: bool = False,
):
    """Layered distributed MaxIS; returns ``(IndependentSet, RunReport)``.

    ``report.extra`` holds the protocol-round count, the iteration length,
    the per-iteration MIS members and (with ``snapshots``) the run itself
    under ``"run"`` for trace analysis.
    """
    cfg = cfg or EngineConfig()
    proto = LayeredMaxIS(mis)
    run = run_aggregation(g, proto, cfg, snapshots=snapshots)
    s = IndependentSet(v for v, o in run.outputs.items() if o == IN_IS)
    rep = run.report
    S = proto.period(g.n)
    rep.extra.update(
        {
            "iteration_rounds": S,
            "iterations": -(-run.protocol_rounds // S) if run.protocol_rounds else 0,
            "mis_sets": [sorted(u) for u in joiner_sets(run)],
        }
    )
    if snapshots:
        rep.extra["run"] = run
    return s, rep


def joiner_sets(run: AggregationRun) -> list[frozenset]:
    """MIS members per iteration, read from the final node states."""
    by_iter: dict[int, set] = {}
    for v, st in run.states.items():
        if st.get("ci") is not None:
            by_iter.setdefault(st["ci"], set()).add(v)
    if not by_iter:
        return []
    return [frozenset(by_iter.get(i, ())) for i in range(max(by_iter) + 1)]


def layer_drain(run: AggregationRun, S: int) -> list[dict]:
    """Per-iteration layer-drain records from a snapshotted run.

    For iteration ``i``: ``top`` is the highest layer among live nodes once
    layers are settled (after round ``k = 1``); ``left_in_top`` counts live
    nodes still in that layer after the next reduction round;
    ``incomplete`` counts participants the MIS left undecided.
    """
    snaps = run.snapshots
    out = []
    i = 0
    while i * S + 2 <= len(snaps):
        settled = snaps[i * S + 1]  # after protocol round i*S + 2
        live = {v: d for v, d in settled.items() if d["st"][0] in LIVE}
        if not live:
            break
        top = max(layer_of(d["w"]) for d in live.values())
        end_idx = min((i + 1) * S, len(snaps) - 1)  # after round (i+1)*S + 1
        after = snaps[end_idx]
        last = snaps[min((i + 1) * S - 1, len(snaps) - 1)]
        left = [v for v, d in after.items() if d["st"][0] in LIVE and layer_of(d["w"]) == top]
        incomplete = [v for v, d in last.items() if d["st"][0] == PART and d["lb"][0] == UNDEC]
        out.append({"iteration": i, "top": top, "left_in_top": left, "incomplete": incomplete})
        i += 1
    return out


# --------------------------------------------------------------------------
# coloring


class _ColorNode(NodeProcess):
    """Colors itself once it has the smallest id among uncolored neighbors."""

    def __init__(self, vid, neighbors):
        self.vid = vid
        self.uncolored = set(neighbors)
        self.used: set[int] = set()

    def on_round(self, ctx, inbox):
        for u, msgs in inbox.items():
            for m in msgs:
                self.used.add(m.payload[0])
                self.uncolored.discard(u)
        if all(self.vid < u for u in self.uncolored):
            c = 0
            while c in self.used:
                c += 1
            msg = ctx.message("color", ("int", c))
            for u in self.uncolored:
                ctx.send(u, msg)
            ctx.halt(c)


def simple_coloring(g: Graph, cfg: EngineConfig | None = None) -> tuple[dict[int, int], RunReport]:
    """Proper coloring with at most ``Delta + 1`` colors by id-minima."""
    cfg = cfg or EngineConfig(max_rounds=max(g.n, 1) + 1)
    rep = run_protocol(g, lambda v: _ColorNode(v, g.neighbors(v)), cfg)
    if not rep.terminated:
        raise RuntimeError("coloring did not finish within the round budget")
    colors = {v: rep.outputs[v] for v in g.nodes}
    for u, v in g.edges:
        if colors[u] == colors[v]:
            raise RuntimeError(f"coloring produced equal colors on {(u, v)}")
    return colors, rep


def _f_cred(t, v, d, u, du):
    code, ci = du["st"]
    return du["w"] if code == CAND and ci == (t - 1) // 2 - 1 else 0


def _f_hicolor(t, v, d, u, du):
    return du["st"][0] == ACTIVE and du["c"] > d["c"]


class ColoringMaxIS(AggregationProtocol):
    """Local ratio driven by a proper coloring.

    Step ``s`` uses two protocol rounds: ``2s + 1`` applies reductions from
    the nodes that became candidates in step ``s - 1``; ``2s + 2`` turns
    every live node whose color beats all live neighbors into a candidate.
    ``info[v]["color"]`` supplies the coloring.
    """

    fields = {"w": "weight", "st": "st", "c": "color"}
    shared_init = frozenset({"st"})
    folds = {
        "red": NeighborFold(SUM, _f_cred),
        "hic": NeighborFold(ANY, _f_hicolor),
        **_ADDITION_FOLDS,
    }

    def init(self, vid, weight, info):
        return {"w": weight, "ci": None, "left": None}, {"w": weight, "st": (ACTIVE, None), "c": info["color"]}

    def needs(self, t, data):
        code = data["st"][0]
        if code == CAND:
            return ("inis", "block")
        if code != ACTIVE:
            return ()
        return ("red",) if t % 2 == 1 else ("hic",)

    def step(self, t, vid, state, data, agg, rng):
        code = data["st"][0]
        if code == CAND:
            return _addition_step(agg, state, data)
        s = (t - 1) // 2
        if t % 2 == 1:
            red = agg["red"]
            if red:
                w = state["w"] - red
                state = dict(state, w=w)
                if w <= 0:
                    state["left"] = t
                    return state, dict(data, st=(OUT, None)), NOT_IN_IS
                return state, dict(data, w=w), None
            return state, data, None
        if not agg["hic"]:
            state = dict(state, ci=s, left=t)
            return state, dict(data, st=(CAND, s)), None
        return state, data, None


def coloring_maxis(g: Graph, cfg: EngineConfig | None = None, colors: Mapping[int, int] | None = None):
    """Coloring-based MaxIS; returns ``(IndependentSet, RunReport)``.

    ``report.extra["removal_engine_rounds"]`` is the engine round in which
    the last node left the removal stage (0 if the graph is empty).
    """
    cfg = cfg or EngineConfig()
    if colors is None:
        colors, crep = simple_coloring(g)
        coloring_rounds = crep.rounds_used
    else:
        coloring_rounds = 0
    info = {v: {"color": colors[v]} for v in g.nodes}
    run = run_aggregation(g, ColoringMaxIS(), cfg, info=info)
    s = IndependentSet(v for v, o in run.outputs.items() if o == IN_IS)
    rep = run.report
    lefts = [st["left"] for st in run.states.values() if st.get("left") is not None]
    rep.extra.update(
        {
            "coloring_rounds": coloring_rounds,
            "colors_used": len(set(colors.values())),
            "removal_engine_rounds": (max(lefts) + 1) if lefts else 0,
            "mis_sets": [sorted(u) for u in joiner_sets(run)],
        }
    )
    return s, rep
