from __future__ import annotations

import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from congestlab.graph import BipartiteGraph, build_graph

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# filled by tests/test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@st.composite
def graphs(draw, max_n: int = 9, max_w: int = 64, edge_weights: bool = False, max_m: int | None = None):
    """Small simple graphs with positive node weights (and edge weights on request)."""
    n = draw(st.integers(0, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    if max_m is not None:
        chosen = chosen[:max_m]
    weights = {v: draw(st.integers(1, max_w)) for v in range(n)}
    ew = None
    if edge_weights:
        ew = {e: draw(st.integers(1, max_w)) for e in chosen}
    return build_graph(chosen, weights, edge_weights=ew)


@st.composite
def bipartite_graphs(draw, max_side: int = 6):
    na = draw(st.integers(0, max_side))
    nb = draw(st.integers(0, max_side))
    pairs = [(a, na + b) for a in range(na) for b in range(nb)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    g = build_graph(chosen, {v: 1 for v in range(na + nb)})
    return BipartiteGraph(g, {v: ("A" if v < na else "B") for v in range(na + nb)})
