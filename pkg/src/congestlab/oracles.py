"""Exhaustive ground truth for small instances.

Everything here is a plain function of its inputs: optimal independent
sets and matchings by branch and bound, maximality checks, shortest
augmenting paths and per-node sums over augmenting paths.  Size guards
raise instead of quietly running for hours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .graph import BipartiteGraph, Graph, IndependentSet, Matching

__all__ = [
    "OracleResult",
    "OracleSizeError",
    "MAX_IS_NODES",
    "MAX_MATCHING_EDGES",
    "brute_is",
    "brute_matching",
    "berge_matching",
    "is_maximal",
    "shortest_aug_len",
    "path_stats",
    "half_paths",
]

MAX_IS_NODES = 24
MAX_MATCHING_EDGES = 24


class OracleSizeError(ValueError):
    """The instance is larger than the oracle's size guard."""


@dataclass(frozen=True)
class OracleResult:
    value: int
    witness: Any
    count: int  # search nodes visited


def brute_is(g: Graph) -> OracleResult:
    """Maximum weight independent set by include/exclude branch and bound."""
    if g.n > MAX_IS_NODES:
        raise OracleSizeError(f"brute_is supports n <= {MAX_IS_NODES}, got {g.n}")
    order = sorted(g.nodes, key=lambda v: (-g.degree(v), v))
    pos = {v: i for i, v in enumerate(order)}
    w = [g.weight(v) for v in order]
    nbr = [frozenset(pos[u] for u in g.neighbors(v)) for v in order]
    best_val = -1
    best: tuple = ()
    count = 0

    def go(i: int, blocked: frozenset, cur: int, chosen: tuple, rest: int):
        # ``rest``: weight of the undecided, unblocked nodes from position i on
        nonlocal best_val, best, count
        count += 1
        if cur + rest <= best_val:
            return
        if i == len(order):
            best_val, best = cur, chosen
            return
        rest_next = rest - (0 if i in blocked else w[i])
        if i not in blocked:
            newly = sum(w[j] for j in nbr[i] if j > i and j not in blocked)
            go(i + 1, blocked | nbr[i], cur + w[i], chosen + (i,), rest_next - newly)
        go(i + 1, blocked, cur, chosen, rest_next)

    go(0, frozenset(), 0, (), sum(w))
    return OracleResult(best_val, IndependentSet(order[i] for i in best), count)


def brute_matching(g: Graph, weighted: bool = True) -> OracleResult:
    """Maximum (weight) matching by edge-ordered branch and bound."""
    if g.m > MAX_MATCHING_EDGES:
        raise OracleSizeError(f"brute_matching supports m <= {MAX_MATCHING_EDGES}, got {g.m}")
    edges = sorted(g.edges, key=lambda e: (-(g.edge_weight(*e) if weighted else 1), e))
    ws = [g.edge_weight(*e) if weighted else 1 for e in edges]
    best_val = -1
    best: tuple = ()
    count = 0

    def bound(i: int, used: set) -> int:
        # every remaining usable edge, but no more than half the free endpoints can pair up
        total = 0
        k = 0
        free = set()
        for j in range(i, len(edges)):
            u, v = edges[j]
            if u in used or v in used:
                continue
            free.update((u, v))
        cap = len(free) // 2
        for j in range(i, len(edges)):
            u, v = edges[j]
            if u in used or v in used:
                continue
            if k == cap:
                break
            total += ws[j]
            k += 1
        return total

    def go(i: int, used: set, cur: int, chosen: tuple):
        nonlocal best_val, best, count
        count += 1
        if cur > best_val:
            best_val, best = cur, chosen
        if i == len(edges) or cur + bound(i, used) <= best_val:
            return
        u, v = edges[i]
        if u not in used and v not in used:
            used.add(u)
            used.add(v)
            go(i + 1, used, cur + ws[i], chosen + (edges[i],))
            used.discard(u)
            used.discard(v)
        go(i + 1, used, cur, chosen)

    go(0, set(), 0, ())
    return OracleResult(best_val, Matching(best), count)


def _find_aug_path(g: Graph, mate: Mapping[int, int]) -> list[int] | None:
    """Any augmenting path, by exhaustive search over simple alternating paths."""
    for s in g.nodes:
        if s in mate:
            continue
        stack = [(s, [s], {s})]
        while stack:
            v, path, seen = stack.pop()
            for u in g.neighbors(v):
                if u in seen or mate.get(v) == u:
                    continue
                if u not in mate:
                    return path + [u]
                w = mate[u]
                if w in seen:
                    continue
                stack.append((w, path + [u, w], seen | {u, w}))
    return None


def berge_matching(g: Graph) -> Matching:
    """Maximum cardinality matching: augment until no augmenting path exists.

    Independent of :func:`brute_matching`; exponential in the worst case
    and only meant for cross-checking at desk scale.
    """
    mate: dict[int, int] = {}
    while True:
        p = _find_aug_path(g, mate)
        if p is None:
            return Matching((u, v) for u, v in mate.items() if u < v)
        for i in range(0, len(p), 2):
            a, b = p[i], p[i + 1]
            mate[a] = b
            mate[b] = a


def is_maximal(g: Graph, s) -> bool:
    """True iff ``s`` is valid and nothing can be added to it."""
    if isinstance(s, Matching):
        if not s.is_valid(g):
            return False
        used = s.matched_nodes()
        return all(u in used or v in used for u, v in g.edges)
    if isinstance(s, IndependentSet):
        if not s.is_valid(g):
            return False
        return all(v in s or any(u in s for u in g.neighbors(v)) for v in g.nodes)
    raise TypeError(f"expected Matching or IndependentSet, got {type(s).__name__}")


def _aug_paths_from(g: Graph, mate: Mapping[int, int], s: int, limit: int, allowed) -> Iterable[list[int]]:
    """Simple augmenting paths starting at free ``s`` with at most ``limit`` edges."""
    stack = [(s, [s])]
    while stack:
        v, path = stack.pop()
        if len(path) - 1 >= limit:
            continue
        for u in g.neighbors(v):
            if u in path or u not in allowed or mate.get(v) == u:
                continue
            if u not in mate:
                yield path + [u]
                continue
            w = mate[u]
            if w in path or w not in allowed or len(path) + 1 > limit:
                continue
            stack.append((w, path + [u, w]))


def shortest_aug_len(g: Graph, m: Matching, active: Iterable[int] | None = None) -> float:
    """Length of a shortest augmenting path, or ``math.inf``.

    With ``active`` only paths whose nodes are all active count.  Walks
    every simple alternating path from every free node, so it is exact in
    general graphs too (plain BFS layering is not, because of odd cycles).
    """
    mate = m.mate()
    allowed = set(g.nodes) if active is None else set(active)
    free = [v for v in g.nodes if v not in mate and v in allowed]
    best = math.inf
    for s in free:
        for p in _aug_paths_from(g, mate, s, g.n, allowed):
            best = min(best, len(p) - 1)
            if best == 1:
                return 1
    return best


def half_paths(bg: BipartiteGraph, m: Matching, d: int) -> list[tuple[int, ...]]:
    """All augmenting paths with exactly ``d`` edges from a free A node to a free B node."""
    g = bg.graph
    mate = m.mate()
    out = []
    for a in bg.A:
        if a in mate:
            continue
        for p in _aug_paths_from(g, mate, a, d, set(g.nodes)):
            if len(p) - 1 == d and bg.side[p[-1]] == "B":
                out.append(tuple(p))
    return sorted(out)


def path_stats(bg: BipartiteGraph, m: Matching, d: int, alpha: Mapping[int, Any] | None = None) -> dict[int, Fraction]:
    """Per node, the sum over length-``d`` augmenting paths through it of the
    product of ``alpha`` along the path (``alpha`` missing means 1)."""
    alpha = alpha or {}
    out = {v: Fraction(0) for v in bg.graph.nodes}
    for p in half_paths(bg, m, d):
        prod = Fraction(1)
        for v in p:
            prod *= Fraction(alpha.get(v, 1))
        for v in p:
            out[v] += prod
    return out

