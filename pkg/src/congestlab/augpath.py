"""Augmenting paths: (1+eps) matchings in LOCAL and CONGEST, and a proposal
based (2+eps) matching.

LOCAL.  For each odd length ``d`` the augmenting paths of length ``d`` are
hyperedges over the graph's nodes.  A nearly-maximal hypergraph matching
picks disjoint paths; nodes that sit through too many good rounds without
being removed are deactivated, so at the end of a phase no length-``d``
path survives among active nodes and the next phase starts at ``d + 2``.

CONGEST.  The graph is randomly split into a bipartite graph.  For each odd
``d`` the nodes repeatedly learn the probability mass of the length-``d``
augmenting paths through them by a forward and a backward sweep, adjust
their attenuations, and sample paths link by link with tokens.

Orientation in the bipartite routines: paths run from a free A node over an
unmatched edge to B, over a matched edge back to A, and end at a free B
node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

from .engine import EngineConfig, Message, NodeProcess, RunReport, merge_reports, node_rng, run_protocol
from .graph import BipartiteGraph, Graph, Matching, build_graph, edge_id
from .oracles import shortest_aug_len

__all__ = [
    "AugPath",
    "is_augmenting",
    "flip",
    "enumerate_aug_paths",
    "Hypergraph",
    "HypergraphRun",
    "hypergraph_nm_matching",
    "mcm_1eps_local",
    "Traversal",
    "forward_traversal",
    "backward_traversal",
    "PathState",
    "initial_path_state",
    "update_attenuations",
    "mark_and_extract",
    "CongestParams",
    "PhaseResult",
    "bipartite_phase",
    "mcm_1eps_congest",
    "proposal_rounds",
    "proposal_2eps_bipartite",
    "mcm_2eps_alt",
]

HYPER_STREAM = 10
MARK_STREAM = 11
COLOR_STREAM = 12
PROPOSE_STREAM = 13
SIDE_STREAM = 14


# ---------------------------------------------------------------------------
# paths and flips


class AugPath(tuple):
    """Node sequence ``v0 .. vp`` of a path with ``p`` edges."""

    def __new__(cls, nodes: Iterable[int]):
        nodes = tuple(int(v) for v in nodes)
        if len(nodes) < 2:
            raise ValueError("a path needs at least two nodes")
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"path {nodes} repeats a node")
        return super().__new__(cls, nodes)

    @property
    def length(self) -> int:
        return len(self) - 1

    def edges(self) -> list[tuple[int, int]]:
        return [edge_id(self[i], self[i + 1]) for i in range(len(self) - 1)]

    def canonical(self) -> "AugPath":
        """The same undirected path with the lower-id endpoint first."""
        return self if self[0] < self[-1] else AugPath(reversed(self))


def is_augmenting(m: Matching, p: Sequence[int], g: Graph | None = None) -> bool:
    """Free endpoints, odd length, edges alternating unmatched/matched."""
    try:
        p = AugPath(p)
    except ValueError:
        return False
    mate = m.mate()
    if p.length % 2 == 0 or p[0] in mate or p[-1] in mate:
        return False
    for i, e in enumerate(p.edges()):
        if g is not None and not g.has_edge(*e):
            return False
        if (e in m) != (i % 2 == 1):
            return False
    return True


def flip(m: Matching, p: Sequence[int], g: Graph | None = None) -> Matching:
    """``m`` with the edges of augmenting path ``p`` exchanged; one larger."""
    if not is_augmenting(m, p, g):
        raise ValueError(f"{tuple(p)} is not an augmenting path for the matching")
    edges = AugPath(p).edges()
    return Matching((m - set(edges[1::2])) | set(edges[0::2]))


def enumerate_aug_paths(g: Graph, m: Matching, length: int, active: Iterable[int] | None = None) -> list[AugPath]:
    """Every augmenting path with exactly ``length`` edges, each once.

    Paths are canonical (lower-id endpoint first) and sorted.  With
    ``active`` only paths whose nodes are all active are listed.
    """
    if length < 1 or length % 2 == 0:
        raise ValueError("augmenting path length must be a positive odd number")
    mate = m.mate()
    ok = set(g.nodes) if active is None else set(active)
    out = []

    def extend(path: list[int], on: set[int]):
        v = path[-1]
        edges_so_far = len(path) - 1
        for u in g.neighbors(v):
            if u in on or u not in ok or mate.get(v) == u:
                continue
            if u not in mate:
                if edges_so_far + 1 == length and path[0] < u:
                    out.append(AugPath(path + [u]))
                continue
            w = mate[u]
            if w in on or w not in ok or edges_so_far + 3 > length:
                continue
            path += [u, w]
            on.update((u, w))
            extend(path, on)
            on.difference_update((u, w))
            del path[-2:]

    for s in g.nodes:
        if s in ok and s not in mate:
            extend([s], {s})
    return sorted(out)


# ---------------------------------------------------------------------------
# nearly-maximal matching in low-rank hypergraphs


@dataclass(frozen=True)
class Hypergraph:
    """Hyperedges over integer vertices; ``edges[i]`` is the i-th hyperedge."""

    vertices: tuple[int, ...]
    edges: tuple[frozenset, ...]

    @classmethod
    def from_edges(cls, edges: Iterable[Iterable[int]], vertices: Iterable[int] | None = None) -> "Hypergraph":
        es = tuple(frozenset(int(x) for x in e) for e in edges)
        vs = set(x for e in es for x in e)
        if vertices is not None:
            vs |= set(int(x) for x in vertices)
        if any(len(e) == 0 for e in es):
            raise ValueError("hyperedges must be non-empty")
        return cls(tuple(sorted(vs)), es)

    @property
    def rank(self) -> int:
        return max((len(e) for e in self.edges), default=0)

    def incidence(self) -> dict[int, list[int]]:
        inc: dict[int, list[int]] = {v: [] for v in self.vertices}
        for i, e in enumerate(self.edges):
            for v in e:
                inc[v].append(i)
        return inc


@dataclass
class HypergraphRun:
    matched: list[int]  # indices of chosen hyperedges
    deactivated: set[int]
    rounds: int
    T: int
    cap: int
    maximal: bool  # no hyperedge has all its vertices active and unmatched
    good: dict[int, int] = field(default_factory=dict)
    trace: list[dict] = field(default_factory=list)


def good_round_cap(d: int, K: int, delta: float, const: float) -> int:
    """Good rounds a vertex may see before it is deactivated."""
    return max(1, math.ceil(const * d * K * K * math.log(1.0 / delta)))


def hypergraph_round_budget(d: int, K: int, cap: int, max_incidence: int) -> int:
    """Round budget after which no all-active hyperedge may remain.

    Follows the counting argument: a vertex has at most ``3 cap`` heavy
    rounds from good-round growth plus ``3 d log_K(incidence)`` from its
    starting mass, a hyperedge at most ``d`` times that many crowded
    rounds, and every other round is good for all of its vertices.
    """
    logk = math.ceil(math.log(max(max_incidence, 2)) / math.log(K))
    h = d * (3 * cap + 3 * d * logk + 3)
    return 3 * h + cap + 1


def hypergraph_nm_matching(
    h: Hypergraph,
    d: int | None = None,
    K: int = 2,
    delta: float = 0.05,
    seed: int = 0,
    *,
    good_const: float = 2.0,
    T: int | None = None,
    stream: int = HYPER_STREAM,
    trace: bool = False,
) -> HypergraphRun:
    """Nearly-maximal matching of hyperedges of rank at most ``d``.

    Each hyperedge ``e`` has ``p(e) = K**-j(e)``, starting at ``1/K``.  In
    a round, ``e`` is light when the mass of the hyperedges meeting it
    (itself included) is below 2; a vertex has a good round when the light
    hyperedges through it carry at least ``1/(2 d K^2)``.  Hyperedges mark
    with probability ``p``; a marked one with no marked neighbor joins and
    its vertices leave.  Crowded hyperedges divide ``p`` by ``K``, others
    multiply it back up to ``1/K``.  A vertex with more than ``cap`` good
    rounds is deactivated.
    """
    d = h.rank if d is None else d
    if h.rank > d:
        raise ValueError(f"hypergraph rank {h.rank} exceeds d = {d}")
    if K < 2 or not 0 < delta < 1:
        raise ValueError("need K >= 2 and 0 < delta < 1")
    d = max(d, 1)
    inc = h.incidence()
    conflicts = [sorted({j for v in e for j in inc[v]}) for e in h.edges]
    cap = good_round_cap(d, K, delta, good_const)
    T = T if T is not None else hypergraph_round_budget(d, K, cap, max((len(x) for x in inc.values()), default=1))
    j = [1] * len(h.edges)
    gone: set[int] = set()  # matched vertices
    deact: set[int] = set()
    good = {v: 0 for v in h.vertices}
    matched: list[int] = []
    rows = []
    K_ = Fraction(K)
    good_bar = Fraction(1, 2 * d * K * K)
    rounds = 0

    def live_edges():
        return [i for i, e in enumerate(h.edges) if not (e & gone) and not (e & deact)]

    live = live_edges()
    while live and rounds < T:
        t = rounds
        rounds += 1
        liveset = set(live)
        p = {i: K_ ** -j[i] for i in live}
        mass = {i: sum(p[x] for x in conflicts[i] if x in liveset) for i in live}
        light = {i for i in live if mass[i] < 2}
        load: dict[int, Fraction] = {}
        for i in light:
            for v in h.edges[i]:
                load[v] = load.get(v, Fraction(0)) + p[i]
        good_now = sorted(v for v, s in load.items() if s >= good_bar)
        for v in good_now:
            good[v] += 1
        marked = {i for i in live if Fraction(node_rng(seed, stream, i, t).random()) < p[i]}
        joined = [i for i in sorted(marked) if not any(x in marked for x in conflicts[i] if x != i and x in liveset)]
        for i in joined:
            matched.append(i)
            gone |= h.edges[i]
        for i in live:
            j[i] = j[i] + 1 if mass[i] >= 2 else max(1, j[i] - 1)
        newly = sorted(v for v in good_now if good[v] > cap and v not in gone and v not in deact)
        deact.update(newly)
        if trace:
            rows.append({"round": t, "live": len(live), "light": len(light), "joined": joined, "deactivated": newly})
        live = live_edges()
    return HypergraphRun(matched, deact, rounds, T, cap, not live, good, rows)


def mcm_1eps_local(
    g: Graph,
    eps: float = 0.5,
    seed: int = 0,
    *,
    K: int = 2,
    delta: float | None = None,
    good_const: float = 2.0,
    check: bool = True,
) -> tuple[Matching, RunReport]:
    """(1+eps)-approximate maximum cardinality matching in LOCAL.

    Phases run over odd ``d = 1 .. 2 ceil(1/eps) + 1``.  Each phase lists
    the length-``d`` augmenting paths among active nodes, matches them as
    hyperedges, flips the chosen paths and drops deactivated nodes.  With
    ``check`` every phase asserts that no augmenting path of length at
    most ``d`` is left among active nodes.  A hypergraph round is charged
    ``d + 1`` rounds of the base graph.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    delta = eps * eps / 10 if delta is None else delta
    m = Matching()
    active = set(g.nodes)
    phases = []
    base_rounds = 0
    for d in range(1, 2 * math.ceil(1 / eps) + 2, 2):
        paths = enumerate_aug_paths(g, m, d, active)
        run = hypergraph_nm_matching(
            Hypergraph.from_edges(paths), d + 1, K, delta, seed, good_const=good_const, stream=HYPER_STREAM + d
        )
        if not run.maximal:
            raise RuntimeError(f"hypergraph matching left live paths after {run.rounds} rounds at d={d}")
        for i in run.matched:
            m = flip(m, paths[i], g)
        active -= run.deactivated
        after = shortest_aug_len(g, m, active) if check else None
        if check and after <= d:
            raise AssertionError(f"augmenting path of length {after} left after phase d={d}")
        base_rounds += run.rounds * (d + 1)
        phases.append(
            {
                "d": d,
                "paths": len(paths),
                "chosen": len(run.matched),
                "rounds": run.rounds,
                "deactivated": sorted(run.deactivated),
                "shortest_after": after,
            }
        )
    mate = m.mate()
    rep = RunReport(base_rounds, [], {v: mate.get(v) for v in g.nodes}, seed, [], True, model="local")
    rep.extra.update({"phases": phases, "inactive": sorted(set(g.nodes) - active), "K": K, "delta": delta})
    return m, rep


# ---------------------------------------------------------------------------
# CONGEST: forward and backward sweeps over shortest augmenting paths


def _num(x, exact: bool):
    return Fraction(x) if exact else float(x)


def _matched_within(bg: BipartiteGraph, m: Matching) -> dict[int, int]:
    mate = {}
    for u, v in m:
        if u in bg.graph and v in bg.graph:
            if not bg.graph.has_edge(u, v):
                raise ValueError(f"matching edge {(u, v)} is not in the bipartite graph")
            mate[u] = v
            mate[v] = u
    return mate


@dataclass
class Traversal:
    """Record of one sweep.

    ``held[v]``: the value node ``v`` passed on or kept (forward) or the
    path mass through ``v`` (backward).  ``received[v]`` maps each sender
    to the amount ``v`` took in at its first receipt; ``layer[v]`` is the
    hop of that receipt.
    """

    d: int
    held: dict[int, Any]
    received: dict[int, dict[int, Any]]
    layer: dict[int, int]
    report: RunReport
    rounds_per_message: int = 1


def _engine_cfg(cfg: EngineConfig | None, n: int, real_bits: int) -> tuple[EngineConfig, int]:
    """Widen the per-round budget so one value fits one logical round."""
    cfg = cfg or EngineConfig()
    factor = max(1, math.ceil(real_bits / cfg.bandwidth_bits(n)))
    return replace(cfg, bandwidth_mult=cfg.bandwidth_mult * factor, max_rounds=max(cfg.max_rounds, 1)), factor


class _ForwardNode(NodeProcess):
    def __init__(self, v, side, mate, alpha, d, exact, bits, sink):
        self.v, self.side, self.mate, self.alpha, self.d = v, side, mate, alpha, d
        self.exact, self.bits, self.sink = exact, bits, sink
        self.done = False

    def _send_on(self, ctx, val, t):
        if t < self.d:
            for u in ctx.neighbors:
                if u != self.mate:
                    ctx.send(u, Message("f", (val,), self.bits))

    def on_round(self, ctx, inbox):
        r = ctx.round
        held, received, layer = self.sink
        if r == 1 and self.side == "A" and self.mate is None:
            val = _num(self.alpha, self.exact)
            held[self.v], layer[self.v] = val, 0
            self._send_on(ctx, val, 0)
            self.done = True
        elif inbox and not self.done:
            t = r - 1
            got = {u: msgs[0].payload[0] for u, msgs in inbox.items()}
            if self.side == "B":
                if self.mate is not None or t == self.d:
                    received[self.v] = got
                    held[self.v] = sum(got.values(), _num(0, self.exact)) * self.alpha
                    layer[self.v] = t
                    self.done = True
                    if self.mate is not None and t < self.d:
                        ctx.send(self.mate, Message("f", (held[self.v],), self.bits))
            elif self.mate is not None and self.mate in got:
                received[self.v] = {self.mate: got[self.mate]}
                held[self.v] = got[self.mate] * self.alpha
                layer[self.v] = t
                self.done = True
                self._send_on(ctx, held[self.v], t)
        if r >= self.d + 1:
            ctx.halt(held.get(self.v))


def forward_traversal(
    bg: BipartiteGraph,
    m: Matching,
    d: int,
    alpha: Mapping[int, Any] | None = None,
    *,
    exact: bool = True,
    cfg: EngineConfig | None = None,
    real_bits: int = 64,
) -> Traversal:
    """``d`` hops outward from the free A nodes.

    A free A node sends its attenuation to its B neighbors.  A matched B
    node, at its first receipt only, passes the sum to its mate; the mate
    multiplies by its own attenuation and passes it to its other B
    neighbors.  A free B node keeps ``alpha * sum`` of what arrives at hop
    ``d``.  Zero values still travel so that first receipts follow the
    graph's layering, not the values.  Needs the shortest augmenting path
    to have at least ``d`` edges.
    """
    if d < 1 or d % 2 == 0:
        raise ValueError("d must be a positive odd number")
    alpha = alpha or {}
    g = bg.graph
    mate = _matched_within(bg, m)
    held: dict[int, Any] = {}
    received: dict[int, dict] = {}
    layer: dict[int, int] = {}
    ecfg, factor = _engine_cfg(cfg, g.n, real_bits)

    def factory(v):
        a = alpha.get(v, 1)
        return _ForwardNode(v, bg.side[v], mate.get(v), _num(a, exact), d, exact, real_bits, (held, received, layer))

    rep = run_protocol(g, factory, ecfg)
    rep.extra["rounds_per_message"] = factor
    zero = _num(0, exact)
    return Traversal(d, {v: held.get(v, zero) for v in g.nodes}, received, layer, rep, factor)


class _BackwardNode(NodeProcess):
    def __init__(self, v, side, mate, fwd: Traversal, exact, bits, through):
        self.v, self.side, self.mate, self.fwd = v, side, mate, fwd
        self.exact, self.bits, self.through = exact, bits, through

    def _split(self, ctx, x):
        rec = self.fwd.received.get(self.v, {})
        total = sum(rec.values(), _num(0, self.exact))
        if x == 0:
            return
        if total == 0:
            raise AssertionError(f"node {self.v} must split {x} but received nothing forward")
        for u in sorted(rec):
            share = x * rec[u] / total
            if share != 0:
                ctx.send(u, Message("b", (share,), self.bits))

    def on_round(self, ctx, inbox):
        r = ctx.round
        d = self.fwd.d
        v = self.v
        if r == 1 and self.side == "B" and self.mate is None and self.fwd.layer.get(v) == d:
            self.through[v] = self.fwd.held[v]
            self._split(ctx, self.fwd.held[v])
        elif inbox:
            y = sum((msgs[0].payload[0] for msgs in inbox.values()), _num(0, self.exact))
            self.through[v] = self.through.get(v, _num(0, self.exact)) + y
            if self.side == "A" and self.mate is not None:
                ctx.send(self.mate, Message("b", (y,), self.bits))
            elif self.side == "B":
                self._split(ctx, y)
        if r >= d + 1:
            ctx.halt(self.through.get(v))


def backward_traversal(
    bg: BipartiteGraph,
    m: Matching,
    d: int,
    fwd: Traversal,
    *,
    exact: bool = True,
    cfg: EngineConfig | None = None,
    real_bits: int = 64,
) -> Traversal:
    """Replay the forward sweep in reverse.

    Free B nodes split what they kept among their A neighbors in
    proportion to what each sent forward; A nodes sum what comes back and
    a matched A passes the sum to its mate, which splits it the same way.
    Afterwards ``held[v]`` is the total marking mass of the length-``d``
    augmenting paths through ``v``.
    """
    if fwd.d != d:
        raise ValueError("forward record was made for a different d")
    g = bg.graph
    mate = _matched_within(bg, m)
    through: dict[int, Any] = {}
    ecfg, factor = _engine_cfg(cfg, g.n, real_bits)
    rep = run_protocol(g, lambda v: _BackwardNode(v, bg.side[v], mate.get(v), fwd, exact, real_bits, through), ecfg)
    rep.extra["rounds_per_message"] = factor
    zero = _num(0, exact)
    return Traversal(d, {v: through.get(v, zero) for v in g.nodes}, fwd.received, fwd.layer, rep, factor)


# ---------------------------------------------------------------------------
# attenuations


@dataclass
class PathState:
    """Attenuations and the latest sweep results of one bipartite phase.

    ``alpha[v]`` lies in ``[floor, alpha0[v]]``; matched B nodes keep 1.
    ``through[v]`` is the path mass through ``v`` from the last backward
    sweep and ``fwd`` the matching forward record.
    """

    side: Mapping[int, str]
    mate: Mapping[int, int]
    alpha: dict[int, Any]
    alpha0: dict[int, Any]
    floor: Any
    through: dict[int, Any] = field(default_factory=dict)
    fwd: Traversal | None = None


def attenuation_floor(max_degree: int, eps: float, exact: bool = True):
    """``Delta ** -(20/eps)``, with the exponent rounded up to an integer."""
    base = max(max_degree, 2)
    e = math.ceil(20 / eps)
    return Fraction(1, base**e) if exact else float(base) ** -e


def initial_path_state(bg: BipartiteGraph, m: Matching, K: int, eps: float, *, exact: bool = True) -> PathState:
    """``1/K`` at free A nodes, 1 everywhere else."""
    mate = _matched_within(bg, m)
    a0 = {}
    for v in bg.graph.nodes:
        free_a = bg.side[v] == "A" and v not in mate
        a0[v] = _num(Fraction(1, K), exact) if free_a else _num(1, exact)
    return PathState(bg.side, mate, dict(a0), a0, attenuation_floor(bg.graph.max_degree, eps, exact))


def update_attenuations(state: PathState, d: int, K: int, eps: float | None = None) -> PathState:
    """Heavy nodes (mass >= 1/(10d)) divide by ``K**(2d)`` down to the floor;
    the others multiply by ``K`` up to their starting value.  Matched B
    nodes stay at 1.  ``eps`` is unused when the state already has a floor
    and only kept for symmetry with :func:`initial_path_state`."""
    heavy = Fraction(1, 10 * d)
    new = dict(state.alpha)
    for v, a in state.alpha.items():
        if state.side[v] == "B" and v in state.mate:
            new[v] = state.alpha0[v]
            continue
        s = state.through.get(v, 0)
        if s >= heavy:
            new[v] = max(a / K ** (2 * d), state.floor)
        else:
            new[v] = min(state.alpha0[v], a * K)
    return replace(state, alpha=new)


# ---------------------------------------------------------------------------
# token marking


class _MarkNode(NodeProcess):
    def __init__(self, v, side, mate, fwd: Traversal, seed, it, coin, exact, sink):
        self.v, self.side, self.mate, self.fwd = v, side, mate, fwd
        self.seed, self.it, self.coin, self.exact = seed, it, coin, exact
        self.sink = sink  # v -> neighbor the token came from (toward its origin)
        self.came_from = None

    def _pick(self) -> int | None:
        rec = self.fwd.received.get(self.v, {})
        total = sum(rec.values(), _num(0, self.exact))
        if total == 0:
            return None
        x = Fraction(node_rng(self.seed, MARK_STREAM + 1, self.v, self.it).random()) * Fraction(total)
        acc = Fraction(0)
        last = None
        for u in sorted(rec):
            if rec[u] == 0:
                continue
            acc += Fraction(rec[u])
            last = u
            if x < acc:
                return u
        return last

    def on_round(self, ctx, inbox):
        r = ctx.round
        d = self.fwd.d
        v = self.v
        if r == 1 and self.side == "B" and self.mate is None and self.fwd.layer.get(v) == d:
            z = Fraction(self.fwd.held[v])
            if 0 < z <= Fraction(1, d):
                c = self.coin(v) if self.coin is not None else None
                if c is None:
                    c = Fraction(node_rng(self.seed, MARK_STREAM, v, self.it).random()) < z
                if c:
                    a = self._pick()
                    if a is not None:
                        self.came_from = "origin"
                        ctx.send(a, Message("tok", (), 1))
        elif inbox:
            toks = [u for u, ms in inbox.items() for msg in ms if msg.tag == "tok"]
            oks = [u for u, ms in inbox.items() for msg in ms if msg.tag == "ok"]
            if len(toks) == 1:
                (u,) = toks
                self.came_from = u
                if self.side == "A" and self.mate is None:
                    self.sink[v] = u
                    ctx.send(u, Message("ok", (), 1))
                elif self.side == "A":
                    ctx.send(self.mate, Message("tok", (), 1))
                else:
                    a = self._pick()
                    if a is not None:
                        ctx.send(a, Message("tok", (), 1))
            for _ in oks:
                if self.came_from == "origin":
                    self.sink[v] = None
                else:
                    self.sink[v] = self.came_from
                    ctx.send(self.came_from, Message("ok", (), 1))
        if r >= 2 * d + 1:
            ctx.halt(self.sink.get(v, False))


def mark_and_extract(
    bg: BipartiteGraph,
    m: Matching,
    d: int,
    state: PathState,
    seed: int = 0,
    *,
    iteration: int = 0,
    coins: Callable[[int], bool | None] | None = None,
    cfg: EngineConfig | None = None,
) -> tuple[list[AugPath], RunReport]:
    """Sample augmenting paths with tokens and return the survivors.

    A free B node with path mass ``0 < z <= 1/d`` starts a token with
    probability ``z`` (``coins(v)`` may force the coin).  Tokens walk back
    along the forward record, each step choosing a predecessor in
    proportion to what it sent forward; a matched A node hands the token
    to its mate.  Two or more tokens meeting at a node all die.  A token
    that reaches a free A node walks back to its origin, and the path it
    traced is returned.  Paths are vertex-disjoint by construction.
    """
    fwd = state.fwd
    if fwd is None or fwd.d != d:
        raise ValueError("state has no forward record for this d")
    exact = all(isinstance(x, Fraction) for x in fwd.held.values())
    g = bg.graph
    mate = _matched_within(bg, m)
    sink: dict[int, Any] = {}
    ecfg = cfg or EngineConfig()
    rep = run_protocol(g, lambda v: _MarkNode(v, bg.side[v], mate.get(v), fwd, seed, iteration, coins, exact, sink), ecfg)
    paths = []
    for a in sorted(sink):
        if bg.side[a] != "A" or a in mate or sink[a] is None:
            continue
        p = [a]
        v = sink[a]
        while v is not None:
            p.append(v)
            v = sink.get(v)
        paths.append(AugPath(p))
    return paths, rep


# ---------------------------------------------------------------------------
# one length inside a bipartite graph


@dataclass(frozen=True)
class CongestParams:
    """Knobs of the CONGEST (1+eps) matching.

    ``good_const * d * K**(2d) * ln(1/delta)`` good iterations deactivate a
    node; ``max_iterations`` (default ``20 * cap``) bounds a phase.
    """

    eps: float = 0.5
    K: int = 2
    delta: float = 0.05
    good_const: float = 10.0
    exact: bool = True
    real_bits: int = 64
    max_iterations: int | None = None

    def cap(self, d: int) -> int:
        return max(1, math.ceil(self.good_const * d * self.K ** (2 * d) * math.log(1.0 / self.delta)))


@dataclass
class PhaseResult:
    matching: Matching
    deactivated: set[int]
    iterations: int
    failed: bool
    paths: list[AugPath]
    reports: list[RunReport]
    rounds_per_message: int
    trace: list[dict] = field(default_factory=list)


def bipartite_phase(
    bg: BipartiteGraph,
    m: Matching,
    d: int,
    params: CongestParams | None = None,
    seed: int = 0,
    *,
    removed: Iterable[int] = (),
    cfg: EngineConfig | None = None,
    check: bool = False,
    trace: bool = False,
) -> PhaseResult:
    """Find and flip augmenting paths of length ``d`` until none is left.

    Every iteration runs a forward and a backward sweep for the path mass
    through each node, a second pair of sweeps restricted to light nodes
    to decide which nodes had a good iteration, token marking, and the
    attenuation update.  Flipped paths leave the problem; so do nodes past
    their good-iteration cap, together with their mates.  ``removed``
    lists nodes already out.  Requires the shortest augmenting path among
    the remaining nodes to have at least ``d`` edges.
    """
    params = params or CongestParams()
    K = params.K
    cap = params.cap(d)
    budget = params.max_iterations if params.max_iterations is not None else 20 * cap
    g = bg.graph
    out = set(removed)
    deact: set[int] = set()
    state = initial_path_state(bg, m, K, params.eps, exact=params.exact)
    good = {v: 0 for v in g.nodes}
    heavy = Fraction(1, 10 * d)
    good_bar = Fraction(1, d * K ** (2 * d))
    reports: list[RunReport] = []
    found: list[AugPath] = []
    rows = []
    factor = 1
    it = 0
    failed = False
    kw = {"exact": params.exact, "cfg": cfg, "real_bits": params.real_bits}
    while True:
        mate = m.mate()
        keep = [v for v in g.nodes if v not in out]
        sub = BipartiteGraph(g.induced(keep), {v: bg.side[v] for v in keep})
        msub = Matching(e for e in m if e[0] in sub.graph and e[1] in sub.graph)
        alpha = {v: state.alpha[v] for v in keep}
        fwd = forward_traversal(sub, msub, d, alpha, **kw)
        reports.append(fwd.report)
        factor = max(factor, fwd.rounds_per_message)
        if not any(fwd.held[v] != 0 for v in keep if sub.side[v] == "B" and v not in mate and fwd.layer.get(v) == d):
            break
        if it >= budget:
            failed = True
            break
        bwd = backward_traversal(sub, msub, d, fwd, **kw)
        reports.append(bwd.report)
        light_alpha = {v: (alpha[v] if bwd.held[v] < heavy else 0 * alpha[v]) for v in keep}
        lf = forward_traversal(sub, msub, d, light_alpha, **kw)
        lb = backward_traversal(sub, msub, d, lf, **kw)
        reports += [lf.report, lb.report]
        goods = [v for v in keep if lb.held[v] >= good_bar]
        for v in goods:
            good[v] += 1
        state = replace(state, through=dict(bwd.held), fwd=fwd)
        paths, mrep = mark_and_extract(sub, msub, d, state, seed, iteration=it, cfg=cfg)
        reports.append(mrep)
        for p in paths:
            m = flip(m, p, g)
            out.update(p)
            found.append(p)
        state = update_attenuations(state, d, K)
        newly = sorted(v for v in goods if good[v] > cap and v not in out)
        mate = m.mate()
        for v in newly:
            deact.add(v)
            out.add(v)
            if v in mate:
                out.add(mate[v])
        if trace:
            rows.append(
                {
                    "iteration": it,
                    "paths": [tuple(p) for p in paths],
                    "heavy": sorted(v for v in keep if bwd.held[v] >= heavy),
                    "good": goods,
                    "deactivated": newly,
                }
            )
        it += 1
    if check:
        left = enumerate_paths_bipartite(bg, m, d, [v for v in g.nodes if v not in out])
        if left:
            raise AssertionError(f"length-{d} augmenting paths left among active nodes: {left[:3]}")
    return PhaseResult(m, deact, it, failed, found, reports, factor, rows)


def enumerate_paths_bipartite(bg: BipartiteGraph, m: Matching, d: int, active: Iterable[int]) -> list[AugPath]:
    """Length-``d`` augmenting paths of ``m`` in ``bg`` among ``active`` nodes."""
    return enumerate_aug_paths(bg.graph, m, d, active)


def _two_coloring(g: Graph, m: Matching, seed: int, stage: int) -> BipartiteGraph:
    red = {v: node_rng(seed, COLOR_STREAM, v, stage).random() < 0.5 for v in g.nodes}
    mate = m.mate()
    keep = [v for v in g.nodes if v not in mate or red[v] != red[mate[v]]]
    ks = set(keep)
    edges = [(u, v) for u, v in g.edges if u in ks and v in ks and red[u] != red[v]]
    sub = build_graph(edges, {v: g.weight(v) for v in keep})
    return BipartiteGraph(sub, {v: ("A" if red[v] else "B") for v in keep})


def mcm_1eps_congest(
    g: Graph,
    eps: float = 0.5,
    seed: int = 0,
    *,
    stages: int | None = None,
    params: CongestParams | None = None,
    cfg: EngineConfig | None = None,
) -> tuple[Matching, RunReport]:
    """(1+eps)-approximate maximum cardinality matching in CONGEST.

    ``stages`` (default ``4 * 2**ceil(1/eps)``) times: color nodes red or
    blue at random, keep free nodes and nodes whose matching edge is
    bichromatic, keep the bichromatic edges among them, and run
    :func:`bipartite_phase` for ``d = 1, 3, .., 2 ceil(1/eps) - 1`` (red
    is side A).  Deactivation lasts for the rest of the stage.

    Every sweep value is one logical message; ``rounds_per_message`` in
    the report says how many CONGEST rounds that takes.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = params or CongestParams(eps=eps)
    if params.eps != eps:
        params = replace(params, eps=eps)
    stages = 4 * 2 ** math.ceil(1 / eps) if stages is None else stages
    cfg = cfg or EngineConfig(seed=seed)
    m = Matching()
    reports: list[RunReport] = []
    log = []
    factor = 1
    failed = False
    for s in range(stages):
        bg = _two_coloring(g, m, seed, s)
        inside = Matching(e for e in m if e[0] in bg.graph and e[1] in bg.graph)
        mb = inside
        out: set[int] = set()
        for d in range(1, 2 * math.ceil(1 / eps), 2):
            res = bipartite_phase(bg, mb, d, params, seed * 7919 + s * 31 + d, removed=out, cfg=cfg)
            mb = res.matching
            out |= res.deactivated
            mate = mb.mate()
            out |= {mate[v] for v in res.deactivated if v in mate}
            for p in res.paths:
                out.update(p)
            reports += res.reports
            factor = max(factor, res.rounds_per_message)
            failed = failed or res.failed
            log.append(
                {
                    "stage": s,
                    "d": d,
                    "iterations": res.iterations,
                    "paths": len(res.paths),
                    "deactivated": sorted(res.deactivated),
                    "failed": res.failed,
                }
            )
        m = Matching((m - inside) | mb)
    rep = merge_reports(reports, seed) if reports else RunReport(0, [], {}, seed, [], True)
    mate = m.mate()
    rep.outputs = {v: mate.get(v) for v in g.nodes}
    rep.extra.update(
        {
            "stages": stages,
            "phases": log,
            "rounds_per_message": factor,
            "physical_rounds": rep.rounds_used * factor,
            "failed": failed,
        }
    )
    return m, rep


# ---------------------------------------------------------------------------
# proposals


def proposal_rounds(K: int, eps: float, max_degree: int) -> int:
    """``ceil(K ln(2/eps) + log(Delta)/log(K))``."""
    logd = math.log(max_degree) / math.log(K) if max_degree > 1 else 0.0
    return max(1, math.ceil(K * math.log(2 / eps) + logd))


class _ProposalNode(NodeProcess):
    def __init__(self, v, side, rounds, seed, sink):
        self.v, self.side, self.rounds, self.seed, self.sink = v, side, rounds, seed, sink
        self.remaining: set[int] = set()
        self.k = 0

    def on_round(self, ctx, inbox):
        r = ctx.round
        if r == 1:
            self.remaining = set(ctx.neighbors)
        if self.side == "A":
            for u, ms in inbox.items():
                for msg in ms:
                    if msg.tag == "acc":
                        self.sink[self.v] = u
                        ctx.halt(u)
                        return
                    self.remaining.discard(u)
            k = (r - 1) // 2
            if k >= self.rounds or not self.remaining:
                ctx.halt(None)
                return
            if r % 2 == 1:
                opts = sorted(self.remaining)
                u = opts[int(node_rng(self.seed, PROPOSE_STREAM, self.v, k).integers(len(opts)))]
                ctx.send(u, Message("prop", (), 1))
            return
        if r % 2 == 0:
            props = sorted(inbox)
            if props:
                win = props[-1]
                for u in ctx.neighbors:
                    ctx.send(u, Message("acc" if u == win else "taken", (), 1))
                ctx.halt(win)
                return
        if r >= 2 * self.rounds:
            ctx.halt(None)


def proposal_2eps_bipartite(
    bg: BipartiteGraph,
    K: int = 4,
    rounds: int | None = None,
    seed: int = 0,
    *,
    eps: float = 0.5,
    cfg: EngineConfig | None = None,
) -> tuple[Matching, RunReport]:
    """Left (A) nodes propose, right (B) nodes accept the highest id.

    Each round every unmatched A node with a free B neighbor proposes on
    one of those edges uniformly at random; every B node that got
    proposals takes the highest proposer and tells its other neighbors it
    is gone.  ``rounds`` defaults to :func:`proposal_rounds`.  The report
    lists ``unlucky`` A nodes: unmatched with a free neighbor left.
    """
    g = bg.graph
    rounds = proposal_rounds(K, eps, g.max_degree) if rounds is None else rounds
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    sink: dict[int, int] = {}
    cfg = cfg or EngineConfig(seed=seed)
    rep = run_protocol(g, lambda v: _ProposalNode(v, bg.side[v], rounds, seed, sink), cfg)
    m = Matching((a, b) for a, b in sink.items())
    matched = m.matched_nodes()
    unlucky = sorted(
        a for a in bg.A if a not in matched and any(b not in matched for b in g.neighbors(a))
    )
    rep.extra.update({"rounds": rounds, "unlucky": unlucky})
    return m, rep


def mcm_2eps_alt(
    g: Graph,
    eps: float = 0.5,
    seed: int = 0,
    *,
    K: int = 4,
    reps: int | None = None,
    cfg: EngineConfig | None = None,
) -> tuple[Matching, RunReport]:
    """(2+eps)-approximate matching by random bipartitions.

    ``reps`` (default ``ceil(3 log2(4/eps))``) times: every remaining node
    picks left or right with probability 1/2, the proposal algorithm runs
    on the crossing edges, and matched nodes leave with all their edges.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    reps = math.ceil(3 * math.log2(4 / eps)) if reps is None else reps
    m = Matching()
    reports = []
    for i in range(reps):
        used = m.matched_nodes()
        left = {v: node_rng(seed, SIDE_STREAM, v, i).random() < 0.5 for v in g.nodes if v not in used}
        edges = [(u, v) for u, v in g.edges if u in left and v in left and left[u] != left[v]]
        sub = build_graph(edges, {v: g.weight(v) for v in left})
        bg = BipartiteGraph(sub, {v: ("A" if left[v] else "B") for v in left})
        mi, rep = proposal_2eps_bipartite(bg, K, None, seed * 1_000_003 + i, eps=eps, cfg=cfg)
        reports.append(rep)
        m = Matching(m | mi)
    rep = merge_reports(reports, seed) if reports else RunReport(0, [], {}, seed, [], True)
    mate = m.mate()
    rep.outputs = {v: mate.get(v) for v in g.nodes}
    rep.extra["reps"] = reps
    return m, rep
