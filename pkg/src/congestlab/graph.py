"""Graph, matching, independent-set and line-graph types.

Graphs are immutable once built: node ids are arbitrary non-negative
integers, adjacency lists are kept sorted, and every node carries a positive
integer weight.  Edge weights are optional and only used by the matching
algorithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "GraphValidationError",
    "Graph",
    "Matching",
    "IndependentSet",
    "LineGraphMap",
    "BipartiteGraph",
    "Validation",
    "edge_id",
    "build_graph",
    "line_graph",
    "validate_solution",
    "generate",
    "dumps",
    "loads",
    "read_graph",
    "write_graph",
    "MAX_WEIGHT",
]

#: Default cap on weights; weights are assumed polynomial in n.
MAX_WEIGHT = 2**20


class GraphValidationError(ValueError):
    """Malformed graph input.

    ``kind`` is one of ``self-loop``, ``duplicate-edge``, ``bad-weight``,
    ``dangling-endpoint``, ``bad-node``; ``offender`` names the node or edge.
    """

    def __init__(self, kind: str, offender, message: str | None = None):
        self.kind = kind
        self.offender = offender
        super().__init__(message or f"{kind}: {offender!r}")


def edge_id(u: int, v: int) -> tuple[int, int]:
    """Canonical unordered edge (smaller id first)."""
    return (u, v) if u < v else (v, u)


class Graph:
    """Undirected simple graph with positive integer node weights."""

    __slots__ = ("_nodes", "_adj", "_weight", "_edge_weight", "_edges")

    def __init__(self, nodes, adj, weight, edge_weight=None):
        self._nodes: tuple[int, ...] = tuple(nodes)
        self._adj: dict[int, tuple[int, ...]] = adj
        self._weight: dict[int, int] = weight
        self._edge_weight: dict[tuple[int, int], int] | None = edge_weight
        self._edges: tuple[tuple[int, int], ...] = tuple(
            (u, v) for u in self._nodes for v in self._adj[u] if u < v
        )

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    @property
    def n(self) -> int:
        return len(self._nodes)

    @property
    def m(self) -> int:
        return len(self._edges)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self._adj.values()), default=0)

    def weight(self, v: int) -> int:
        return self._weight[v]

    @property
    def weights(self) -> Mapping[int, int]:
        return self._weight

    @property
    def max_weight(self) -> int:
        return max(self._weight.values(), default=1)

    @property
    def has_edge_weights(self) -> bool:
        return self._edge_weight is not None

    def edge_weight(self, u: int, v: int) -> int:
        if self._edge_weight is None:
            return 1
        return self._edge_weight[edge_id(u, v)]

    @property
    def edge_weights(self) -> Mapping[tuple[int, int], int]:
        if self._edge_weight is None:
            return {e: 1 for e in self._edges}
        return self._edge_weight

    def has_edge(self, u: int, v: int) -> bool:
        nb = self._adj.get(u)
        return nb is not None and v in nb

    def __contains__(self, v) -> bool:
        return v in self._adj

    def induced(self, keep: Iterable[int]) -> Graph:
        """Subgraph induced by ``keep`` (weights preserved)."""
        keep = set(keep)
        nodes = [v for v in self._nodes if v in keep]
        adj = {v: tuple(u for u in self._adj[v] if u in keep) for v in nodes}
        weight = {v: self._weight[v] for v in nodes}
        ew = None
        if self._edge_weight is not None:
            ew = {e: w for e, w in self._edge_weight.items() if e[0] in keep and e[1] in keep}
        return Graph(nodes, adj, weight, ew)

    def edge_subgraph(self, edges: Iterable[tuple[int, int]]) -> Graph:
        """Same node set, only the given edges."""
        es = {edge_id(*e) for e in edges}
        adj: dict[int, list[int]] = {v: [] for v in self._nodes}
        for u, v in es:
            adj[u].append(v)
            adj[v].append(u)
        ew = None
        if self._edge_weight is not None:
            ew = {e: self._edge_weight[e] for e in es}
        return Graph(self._nodes, {v: tuple(sorted(a)) for v, a in adj.items()}, dict(self._weight), ew)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._adj == other._adj
            and self._weight == other._weight
            and self._edge_weight == other._edge_weight
        )

    def __hash__(self):
        return hash((self._nodes, self._edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, max_degree={self.max_degree})"


class Matching(frozenset):
    """Set of canonical edges; validity is checked against a host graph."""

    def __new__(cls, edges: Iterable[tuple[int, int]] = ()):
        return super().__new__(cls, (edge_id(u, v) for u, v in edges))

    def mate(self) -> dict[int, int]:
        out = {}
        for u, v in self:
            out[u] = v
            out[v] = u
        return out

    def matched_nodes(self) -> set[int]:
        return {x for e in self for x in e}

    def is_valid(self, g: Graph) -> bool:
        return validate_solution(g, self).valid


class IndependentSet(frozenset):
    """Set of node ids; validity is checked against a host graph."""

    def is_valid(self, g: Graph) -> bool:
        return validate_solution(g, self).valid


@dataclass(frozen=True)
class LineGraphMap:
    """Line graph L(G) with the primary/secondary endpoint assignment.

    Edge-vertex ``i`` stands for ``edges[i]`` of the original graph; the
    primary endpoint (the smaller node id) simulates it.
    """

    base: Graph
    edges: tuple[tuple[int, int], ...]
    vid: Mapping[tuple[int, int], int]
    primary: tuple[int, ...]
    secondary: tuple[int, ...]
    graph: Graph

    def edge_of(self, i: int) -> tuple[int, int]:
        return self.edges[i]


@dataclass(frozen=True)
class BipartiteGraph:
    """A graph whose nodes are labelled ``"A"`` or ``"B"``; edges cross sides."""

    graph: Graph
    side: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        for v in self.graph.nodes:
            if self.side.get(v) not in ("A", "B"):
                raise GraphValidationError("bad-node", v, f"node {v} has no side label")
        for u, v in self.graph.edges:
            if self.side[u] == self.side[v]:
                raise GraphValidationError("bad-node", (u, v), f"edge {(u, v)} does not cross sides")

    @property
    def A(self) -> list[int]:
        return [v for v in self.graph.nodes if self.side[v] == "A"]

    @property
    def B(self) -> list[int]:
        return [v for v in self.graph.nodes if self.side[v] == "B"]


class Validation(NamedTuple):
    valid: bool
    weight: int
    reason: str = ""


def build_graph(
    edges: Iterable[Sequence[int]],
    weights: Mapping[int, int] | None = None,
    nodes: Iterable[int] | None = None,
    edge_weights: Mapping[tuple[int, int], int] | None = None,
) -> Graph:
    """Validate an edge list and return a :class:`Graph`.

    Nodes are the keys of ``weights`` (plus ``nodes`` if given).  When
    ``weights`` is omitted every endpoint and listed node gets weight 1.
    Edge weights, if given, must cover every edge.
    """
    edges = [tuple(e) for e in edges]
    if weights is None:
        declared = set(nodes or ())
        for e in edges:
            declared.update(e)
        weights = {v: 1 for v in declared}
    else:
        weights = dict(weights)
        for v in nodes or ():
            weights.setdefault(v, 1)
    for v, w in weights.items():
        if not isinstance(v, (int, np.integer)) or v < 0:
            raise GraphValidationError("bad-node", v, f"node id must be a non-negative int, got {v!r}")
        if not isinstance(w, (int, np.integer)) or w < 1:
            raise GraphValidationError("bad-weight", v, f"weight of node {v} must be a positive int, got {w!r}")
    adj: dict[int, set[int]] = {int(v): set() for v in weights}
    seen: set[tuple[int, int]] = set()
    for e in edges:
        if len(e) != 2:
            raise GraphValidationError("bad-node", e, f"edge must be a pair, got {e!r}")
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise GraphValidationError("self-loop", (u, v))
        for x in (u, v):
            if x not in adj:
                raise GraphValidationError("dangling-endpoint", (u, v), f"edge {(u, v)} uses undeclared node {x}")
        key = edge_id(u, v)
        if key in seen:
            raise GraphValidationError("duplicate-edge", key)
        seen.add(key)
        adj[u].add(v)
        adj[v].add(u)
    ew = None
    if edge_weights is not None and (seen or edge_weights):
        ew = {}
        for e, w in edge_weights.items():
            key = edge_id(*e)
            if key not in seen:
                raise GraphValidationError("dangling-endpoint", key, f"weight given for missing edge {key}")
            if not isinstance(w, (int, np.integer)) or w < 1:
                raise GraphValidationError("bad-weight", key, f"weight of edge {key} must be a positive int")
            ew[key] = int(w)
        missing = seen - set(ew)
        if missing:
            raise GraphValidationError("bad-weight", min(missing), f"edge {min(missing)} has no weight")
    nodes_sorted = sorted(adj)
    return Graph(
        nodes_sorted,
        {v: tuple(sorted(adj[v])) for v in nodes_sorted},
        {v: int(weights[v]) for v in nodes_sorted},
        ew,
    )


def line_graph(g: Graph) -> LineGraphMap:
    """Build L(G); edge-vertex weights are the edge weights (1 if absent)."""
    edges = g.edges
    vid = {e: i for i, e in enumerate(edges)}
    incident: dict[int, list[int]] = {v: [] for v in g.nodes}
    for i, (u, v) in enumerate(edges):
        incident[u].append(i)
        incident[v].append(i)
    adj: dict[int, set[int]] = {i: set() for i in range(len(edges))}
    for ids in incident.values():
        for a in ids:
            for b in ids:
                if a != b:
                    adj[a].add(b)
    weights = {i: g.edge_weight(*e) for i, e in enumerate(edges)}
    lg = Graph(range(len(edges)), {i: tuple(sorted(a)) for i, a in adj.items()}, weights)
    return LineGraphMap(
        base=g,
        edges=edges,
        vid=vid,
        primary=tuple(u for u, _ in edges),
        secondary=tuple(v for _, v in edges),
        graph=lg,
    )


def validate_solution(g: Graph, s) -> Validation:
    """Check a matching or independent set against ``g`` and weigh it."""
    if isinstance(s, Matching):
        used: set[int] = set()
        total = 0
        for u, v in sorted(s):
            if not g.has_edge(u, v):
                return Validation(False, 0, f"edge {(u, v)} not in graph")
            if u in used or v in used:
                return Validation(False, 0, f"edges share an endpoint at {(u, v)}")
            used.update((u, v))
            total += g.edge_weight(u, v)
        return Validation(True, total, "")
    if isinstance(s, IndependentSet):
        total = 0
        for v in sorted(s):
            if v not in g:
                return Validation(False, 0, f"node {v} not in graph")
            for u in g.neighbors(v):
                if u in s:
                    return Validation(False, 0, f"edge {edge_id(u, v)} inside set")
            total += g.weight(v)
        return Validation(True, total, "")
    raise TypeError(f"expected Matching or IndependentSet, got {type(s).__name__}")


def _draw_weights(rng, nodes, lo, hi):
    return {v: int(x) for v, x in zip(nodes, rng.integers(lo, hi + 1, size=len(nodes)))}


def generate(
    kind: str,
    *,
    n: int = 0,
    p: float = 0.0,
    k: int = 0,
    n_a: int = 0,
    n_b: int = 0,
    weight_range: tuple[int, int] = (1, 1),
    seed: int = 0,
    weights: Mapping[int, int] | None = None,
    edge_weights: bool = False,
) -> Graph | BipartiteGraph:
    """Seeded graph generator.

    ``kind`` is one of ``erdos_renyi`` (n, p), ``bipartite`` (n_a, n_b, p),
    ``star`` (k leaves around center 0), ``path`` (n), ``cycle`` (n).
    Weights are drawn uniformly from ``weight_range`` unless ``weights``
    overrides them; with ``edge_weights`` the edges get weights from the same
    range.  The same arguments always give the same graph.
    """
    lo, hi = weight_range
    if lo < 1 or hi < lo or hi > MAX_WEIGHT:
        raise ValueError(f"weight_range must satisfy 1 <= lo <= hi <= {MAX_WEIGHT}, got {weight_range}")
    rng = np.random.default_rng(np.uint64(seed % 2**64))
    side = None
    if kind == "erdos_renyi":
        if n < 0 or not 0.0 <= p <= 1.0:
            raise ValueError("erdos_renyi needs n >= 0 and 0 <= p <= 1")
        nodes = list(range(n))
        coins = rng.random(n * (n - 1) // 2)
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        edges = [e for e, c in zip(pairs, coins) if c < p]
    elif kind == "bipartite":
        if n_a < 0 or n_b < 0 or not 0.0 <= p <= 1.0:
            raise ValueError("bipartite needs n_a, n_b >= 0 and 0 <= p <= 1")
        nodes = list(range(n_a + n_b))
        side = {v: ("A" if v < n_a else "B") for v in nodes}
        pairs = [(a, b) for a in range(n_a) for b in range(n_a, n_a + n_b)]
        coins = rng.random(len(pairs))
        edges = [e for e, c in zip(pairs, coins) if c < p]
    elif kind == "star":
        if k < 0:
            raise ValueError("star needs k >= 0")
        nodes = list(range(k + 1))
        edges = [(0, i) for i in range(1, k + 1)]
    elif kind == "path":
        if n < 0:
            raise ValueError("path needs n >= 0")
        nodes = list(range(n))
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "cycle":
        if n < 0 or 0 < n < 3:
            raise ValueError("cycle needs n = 0 or n >= 3")
        nodes = list(range(n))
        edges = [(i, (i + 1) % n) for i in range(n)] if n else []
    else:
        raise ValueError(f"unknown graph kind {kind!r}")
    w = _draw_weights(rng, nodes, lo, hi)
    if weights is not None:
        w.update({int(v): int(x) for v, x in weights.items()})
    ew = None
    if edge_weights:
        canon = sorted(edge_id(*e) for e in edges)
        ew = {e: int(x) for e, x in zip(canon, rng.integers(lo, hi + 1, size=len(canon)))}
    g = build_graph(edges, w, edge_weights=ew)
    if side is not None:
        return BipartiteGraph(g, side)
    return g


def dumps(g: Graph) -> str:
    """Edge-list text: ``n m W`` header, ``u v [w]`` edges, ``v w`` weights."""
    cap = max([g.max_weight if g.n else 1] + list(g.edge_weights.values() if g.has_edge_weights else []))
    lines = [f"{g.n} {g.m} {cap}"]
    for u, v in g.edges:
        if g.has_edge_weights:
            lines.append(f"{u} {v} {g.edge_weight(u, v)}")
        else:
            lines.append(f"{u} {v}")
    for v in g.nodes:
        lines.append(f"{v} {g.weight(v)}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 3:
        raise GraphValidationError("bad-node", None, "missing 'n m W' header")
    try:
        n, m, w_cap = (int(x) for x in rows[0])
        edge_rows = [[int(x) for x in r] for r in rows[1 : 1 + m]]
        weight_rows = [[int(x) for x in r] for r in rows[1 + m :]]
    except ValueError as exc:
        raise GraphValidationError("bad-node", None, f"non-integer token: {exc}") from None
    if len(edge_rows) != m or len(weight_rows) != n:
        raise GraphValidationError("bad-node", None, f"expected {m} edge lines and {n} weight lines")
    weights = {}
    for r in weight_rows:
        if len(r) != 2:
            raise GraphValidationError("bad-node", r, f"weight line must be 'v w', got {r}")
        if r[0] in weights:
            raise GraphValidationError("bad-node", r[0], f"node {r[0]} declared twice")
        weights[r[0]] = r[1]
    ew = None
    if edge_rows and all(len(r) == 3 for r in edge_rows):
        ew = {edge_id(r[0], r[1]): r[2] for r in edge_rows}
    elif any(len(r) not in (2, 3) for r in edge_rows) or any(len(r) == 3 for r in edge_rows):
        raise GraphValidationError("bad-node", None, "edge lines must all be 'u v' or all 'u v w'")
    for v, w in list(weights.items()) + list((ew or {}).items()):
        if w > w_cap:
            raise GraphValidationError("bad-weight", v, f"weight {w} of {v} exceeds header W={w_cap}")
    return build_graph([r[:2] for r in edge_rows], weights, edge_weights=ew)


def read_graph(path) -> Graph:
    with open(path) as fh:
        return loads(fh.read())


def write_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(g))


def log2_ceil(x: int) -> int:
    """``ceil(log2 x)`` for positive ints, 0 for x <= 1."""
    return max(0, math.ceil(math.log2(x))) if x > 1 else 0
