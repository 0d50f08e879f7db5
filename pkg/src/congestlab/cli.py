"""Command line: generate graphs, run algorithms, verify against oracles, sweep.

Exit codes are 0 for success or a passing check, 1 for a failed check and
2 for errors (bad arguments, unreadable graphs, instances past the oracle
size guards).  Reports are JSON, sweeps CSV.  When ``--out`` is missing
and ``CONGESTLAB_OUT`` names a directory, output files go there.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .augpath import mcm_1eps_congest, mcm_1eps_local, mcm_2eps_alt, proposal_2eps_bipartite
from .engine import EngineConfig, RunReport, congestion_audit
from .graph import (
    BipartiteGraph,
    Graph,
    GraphValidationError,
    IndependentSet,
    Matching,
    dumps,
    generate,
    read_graph,
    validate_solution,
)
from .lineagg import mwm_2approx
from .maxis import coloring_maxis, dist_maxis, heaviest_selector, luby_mis, seq_local_ratio
from .nmis import NmisParams, mcm_2eps, mwm_2eps, nmis_run
from .oracles import OracleSizeError, brute_is, brute_matching, is_maximal

OUT_ENV = "CONGESTLAB_OUT"


class CliError(Exception):
    """A user-facing error; the command exits with status 2."""


# ---------------------------------------------------------------------------
# algorithm registry


@dataclass(frozen=True)
class Algo:
    kind: str  # "is" or "matching"
    run: Callable[[Graph, dict], tuple[object, RunReport]]
    weighted: bool  # oracle optimum uses weights
    bound: Callable[[Graph, dict], Fraction | None]  # guaranteed fraction of the optimum
    check: str = "ratio"  # "ratio", "maximal" or "valid"


def _cfg(p: dict) -> EngineConfig:
    return EngineConfig(
        model=p["model"], bandwidth_mult=p["bandwidth_mult"], max_rounds=p["max_rounds"], seed=p["seed"]
    )


def _inv_delta(g: Graph, p: dict) -> Fraction:
    return Fraction(1, max(1, g.max_degree))


def _two_eps(g: Graph, p: dict) -> Fraction:
    return 1 / (2 + Fraction(p["eps"]).limit_denominator(10**6))


def _one_eps(g: Graph, p: dict) -> Fraction:
    return 1 / (1 + Fraction(p["eps"]).limit_denominator(10**6))


def _run_seq(g, p):
    s = seq_local_ratio(g, heaviest_selector)
    return s, RunReport(0, [], {v: v in s for v in g.nodes}, p["seed"], [], True, model="local")


def _run_luby(g, p):
    s, phases, rep = luby_mis(g, p["seed"], _cfg(p))
    return s, rep


def _run_nmis(g, p):
    params = NmisParams(K=p["k"], delta=p["delta"], beta=p["beta"], T=p["rounds"])
    s, residual, rep = nmis_run(g, params, p["seed"], cfg=_cfg(p))
    rep.extra["residual"] = sorted(residual)
    return s, rep


def _sides(g: Graph) -> BipartiteGraph:
    """2-color each component by BFS from its smallest node (side A)."""
    side: dict[int, str] = {}
    for s in g.nodes:
        if s in side:
            continue
        side[s] = "A"
        queue = [s]
        while queue:
            v = queue.pop(0)
            for u in g.neighbors(v):
                if u not in side:
                    side[u] = "B" if side[v] == "A" else "A"
                    queue.append(u)
                elif side[u] == side[v]:
                    raise CliError("proposal_2eps_bipartite needs a bipartite graph")
    return BipartiteGraph(g, side)


ALGOS: dict[str, Algo] = {
    "dist_maxis": Algo("is", lambda g, p: dist_maxis(g, cfg=_cfg(p)), True, _inv_delta),
    "coloring_maxis": Algo("is", lambda g, p: coloring_maxis(g, _cfg(p)), True, _inv_delta),
    "seq_local_ratio": Algo("is", _run_seq, True, _inv_delta),
    "luby_mis": Algo("is", _run_luby, False, lambda g, p: None, "maximal"),
    "nmis_run": Algo("is", _run_nmis, False, lambda g, p: None, "valid"),
    "mwm_2approx": Algo(
        "matching", lambda g, p: mwm_2approx(g, p["variant"], _cfg(p)), True, lambda g, p: Fraction(1, 2)
    ),
    "mcm_2eps": Algo(
        "matching", lambda g, p: mcm_2eps(g, p["eps"], p["seed"], K=p["k"], cfg=_cfg(p)), False, _two_eps
    ),
    "mwm_2eps": Algo("matching", lambda g, p: mwm_2eps(g, p["eps"], p["seed"], K=p["k"]), True, _two_eps),
    "mcm_1eps_local": Algo("matching", lambda g, p: mcm_1eps_local(g, p["eps"], p["seed"]), False, _one_eps),
    "mcm_1eps_congest": Algo(
        "matching", lambda g, p: mcm_1eps_congest(g, p["eps"], p["seed"], cfg=_cfg(p)), False, _one_eps
    ),
    "mcm_2eps_alt": Algo(
        "matching", lambda g, p: mcm_2eps_alt(g, p["eps"], p["seed"], K=p["k"], cfg=_cfg(p)), False, _two_eps
    ),
    "proposal_2eps_bipartite": Algo(
        "matching",
        lambda g, p: proposal_2eps_bipartite(_sides(g), p["k"], p["rounds"], p["seed"], eps=p["eps"], cfg=_cfg(p)),
        False,
        _two_eps,
    ),
}

DEFAULTS = {
    "eps": 0.5,
    "k": 4,
    "delta": 0.1,
    "beta": 10.0,
    "rounds": None,
    "variant": "mis_based",
    "model": "congest",
    "bandwidth_mult": 4,
    "max_rounds": 100_000,
    "seed": 0,
}


def _value(g: Graph, sol, weighted: bool) -> int:
    if isinstance(sol, Matching) and not weighted:
        return len(sol)
    if isinstance(sol, IndependentSet) and not weighted:
        return len(sol)
    return validate_solution(g, sol).weight


def run_algorithm(g: Graph, algo: str, params: dict) -> dict:
    """Run one algorithm and build its JSON-ready report."""
    if algo not in ALGOS:
        raise CliError(f"unknown algorithm {algo!r}; choose from {', '.join(sorted(ALGOS))}")
    p = dict(DEFAULTS, **{k: v for k, v in params.items() if v is not None})
    a = ALGOS[algo]
    sol, rep = a.run(g, p)
    check = validate_solution(g, sol)
    cap = rep.bandwidth_bits
    viol = congestion_audit(rep, cap) if cap is not None else []
    solution = sorted(sol) if a.kind == "is" else [list(e) for e in sorted(sol)]
    residual = rep.extra.get("residual")
    return {
        "algo": algo,
        "params": {k: p[k] for k in sorted(p)},
        "seed": p["seed"],
        "kind": a.kind,
        "solution": solution,
        "value": _value(g, sol, a.weighted),
        "valid": check.valid,
        "rounds": rep.rounds_used,
        "residual_fraction": (len(residual) / g.n if g.n else 0.0) if residual is not None else None,
        "congestion": {
            "model": rep.model,
            "bandwidth_bits": cap,
            "max_edge_bits": max(rep.per_round_max_bits, default=0),
            "violations": len(viol),
        },
        "report": rep.to_dict(),
    }


def verify(report: dict, g: Graph) -> tuple[bool, str]:
    """Check a run report against the oracle; returns ``(passed, message)``."""
    algo = report.get("algo")
    if algo not in ALGOS:
        raise CliError(f"report names unknown algorithm {algo!r}")
    a = ALGOS[algo]
    try:
        if a.kind == "is":
            sol = IndependentSet(int(v) for v in report["solution"])
        else:
            sol = Matching((int(u), int(v)) for u, v in report["solution"])
    except (KeyError, TypeError, ValueError):
        return False, f"{algo}: FAIL invalid (unreadable solution)"
    check = validate_solution(g, sol)
    if not check.valid:
        return False, f"{algo}: FAIL invalid ({check.reason})"
    value = _value(g, sol, a.weighted)
    if a.check == "valid":
        return True, f"{algo}: value={value} valid PASS"
    if a.check == "maximal":
        ok = is_maximal(g, sol)
        return ok, f"{algo}: value={value} maximal={ok} {'PASS' if ok else 'FAIL'}"
    p = dict(DEFAULTS, **report.get("params", {}))
    opt = (brute_is(g) if a.kind == "is" else brute_matching(g, a.weighted)).value
    bound = a.bound(g, p)
    ratio = Fraction(value, opt) if opt else Fraction(1)
    ok = ratio >= bound
    return ok, f"{algo}: value={value} optimum={opt} ratio={ratio} bound={bound} {'PASS' if ok else 'FAIL'}"


# ---------------------------------------------------------------------------
# argument handling


def parse_seeds(text: str) -> list[int]:
    """``"0-9,12,5"`` -> sorted distinct seeds."""
    seeds: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.update(range(int(lo), int(hi) + 1))
        else:
            seeds.add(int(part))
    return sorted(seeds)


_GRID_TYPES = {"eps": float, "k": int, "delta": float, "beta": float, "rounds": int, "variant": str, "bandwidth_mult": int}


def parse_grid(items: list[str] | None) -> list[dict] | None:
    """``["k=2,4,8", "eps=0.5"]`` -> list of parameter dicts (product order).

    ``None`` means no grid was given; an empty string gives an empty grid.
    """
    if items is None:
        return None
    axes = []
    for item in items:
        if not item.strip():
            return []
        name, _, vals = item.partition("=")
        name = name.strip().replace("-", "_")
        if name not in _GRID_TYPES:
            raise CliError(f"unknown grid parameter {name!r}")
        conv = _GRID_TYPES[name]
        values = sorted({conv(x) for x in vals.split(",") if x.strip()})
        if not values:
            return []
        axes.append((name, values))
    axes.sort()
    return [dict(zip([n for n, _ in axes], combo)) for combo in itertools.product(*[v for _, v in axes])]


def parse_gen(text: str) -> dict:
    """``"erdos_renyi:n=10,p=0.3,w=1-64"`` -> generator keyword arguments."""
    kind, _, rest = text.partition(":")
    kw: dict = {"kind": kind}
    for item in filter(None, (x.strip() for x in rest.split(","))):
        k, _, v = item.partition("=")
        if k == "w":
            lo, hi = v.split("-")
            kw["weight_range"] = (int(lo), int(hi))
        elif k == "p":
            kw["p"] = float(v)
        elif k in ("n", "k", "n_a", "n_b"):
            kw[k] = int(v)
        elif k == "edge_weights":
            kw["edge_weights"] = v.lower() in ("1", "true", "yes")
        else:
            raise CliError(f"unknown generator option {k!r}")
    return kw


def _gen(kw: dict, seed: int) -> Graph:
    kw = dict(kw)
    kind = kw.pop("kind")
    g = generate(kind, seed=seed, **kw)
    return g.graph if isinstance(g, BipartiteGraph) else g


def _write(text: str, out: str | None, default_name: str) -> None:
    if out is None and os.environ.get(OUT_ENV):
        os.makedirs(os.environ[OUT_ENV], exist_ok=True)
        out = os.path.join(os.environ[OUT_ENV], default_name)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _load_graph(path: str) -> Graph:
    try:
        return read_graph(path)
    except OSError as exc:
        raise CliError(f"cannot read graph {path}: {exc}") from None
    except GraphValidationError as exc:
        raise CliError(f"malformed graph {path}: {exc}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", help="algorithm name")
    p.add_argument("--eps", type=float)
    p.add_argument("--k", type=int, help="K parameter (probability base or proposal factor)")
    p.add_argument("--delta", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--rounds", type=int, help="iteration or proposal round count")
    p.add_argument("--variant", choices=["mis_based", "coloring_based"])
    p.add_argument("--model", choices=["congest", "local"], default="congest")
    p.add_argument("--bandwidth-mult", type=int, default=4)
    p.add_argument("--max-rounds", type=int, default=DEFAULTS["max_rounds"])


def _params(ns) -> dict:
    return {
        "eps": ns.eps,
        "k": ns.k,
        "delta": ns.delta,
        "beta": ns.beta,
        "rounds": ns.rounds,
        "variant": ns.variant,
        "model": ns.model,
        "bandwidth_mult": ns.bandwidth_mult,
        "max_rounds": ns.max_rounds,
    }


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="congestlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write a seeded random graph")
    g.add_argument("--kind", required=True, choices=["erdos_renyi", "bipartite", "star", "path", "cycle"])
    g.add_argument("--n", type=int, default=0)
    g.add_argument("--p", type=float, default=0.0)
    g.add_argument("--k", type=int, default=0, help="leaves of a star")
    g.add_argument("--n-a", type=int, default=0)
    g.add_argument("--n-b", type=int, default=0)
    g.add_argument("--weights", default="1-1", help="node weight range lo-hi")
    g.add_argument("--node-weights", default=None, help="explicit weights, e.g. 0=5,1=3,2=3")
    g.add_argument("--edge-weights", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")

    r = sub.add_parser("run", help="run an algorithm on a graph file")
    r.add_argument("--graph", required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    _common(r)

    v = sub.add_parser("verify", help="check a report against the oracle")
    v.add_argument("--report", required=True)
    v.add_argument("--graph", required=True)

    s = sub.add_parser("sweep", help="run a parameter grid over many seeds, CSV out")
    s.add_argument("--graph", help="graph file used for every seed")
    s.add_argument("--gen", help="generator and options, one graph per seed, e.g. erdos_renyi:n=10,p=0.3")
    s.add_argument("--seeds", default="0")
    s.add_argument("--grid", action="append", help="name=v1,v2 (repeatable)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    _common(s)
    return ap


def cmd_generate(ns) -> int:
    lo, _, hi = ns.weights.partition("-")
    weights = None
    if ns.node_weights:
        weights = {int(a): int(b) for a, b in (x.split("=") for x in ns.node_weights.split(","))}
    g = generate(
        ns.kind,
        n=ns.n,
        p=ns.p,
        k=ns.k,
        n_a=ns.n_a,
        n_b=ns.n_b,
        weight_range=(int(lo), int(hi or lo)),
        seed=ns.seed,
        weights=weights,
        edge_weights=ns.edge_weights,
    )
    if isinstance(g, BipartiteGraph):
        g = g.graph
    _write(dumps(g), ns.out, f"{ns.kind}-{ns.seed}.txt")
    return 0


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def cmd_run(ns) -> int:
    if not ns.algo:
        raise CliError("--algo is required")
    g = _load_graph(ns.graph)
    params = dict(_params(ns), seed=ns.seed)
    out = run_algorithm(g, ns.algo, params)
    _write(_dump(out), ns.out, f"{ns.algo}-{ns.seed}.json")
    return 0


def cmd_verify(ns) -> int:
    g = _load_graph(ns.graph)
    try:
        with open(ns.report) as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read report {ns.report}: {exc}") from None
    try:
        ok, msg = verify(report, g)
    except OracleSizeError as exc:
        raise CliError(str(exc)) from None
    print(msg)
    return 0 if ok else 1


SWEEP_COLUMNS = ["seed", "value", "rounds", "residual_fraction", "valid"]


def sweep_rows(graph_for: Callable[[int], Graph], algo: str, base: dict, grid: list[dict], seeds: list[int], workers: int = 1):
    """All rows of a sweep, ordered by (parameters, seed)."""
    jobs = [(combo, s) for combo in grid for s in seeds]

    def one(job):
        combo, s = job
        res = run_algorithm(graph_for(s), algo, dict(base, **combo, seed=s))
        rf = res["residual_fraction"]
        return dict(combo, seed=s, value=res["value"], rounds=res["rounds"], residual_fraction="" if rf is None else rf, valid=res["valid"])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(j) for j in jobs]
    return rows


def cmd_sweep(ns) -> int:
    if not ns.algo:
        raise CliError("--algo is required")
    if ns.algo not in ALGOS:
        raise CliError(f"unknown algorithm {ns.algo!r}")
    if (ns.graph is None) == (ns.gen is None):
        raise CliError("give exactly one of --graph and --gen")
    grid = parse_grid(ns.grid)
    if grid is None:
        grid = [{}]
    keys = sorted({k for combo in grid for k in combo})
    seeds = parse_seeds(ns.seeds)
    if ns.graph is not None:
        fixed = _load_graph(ns.graph)
        graph_for = lambda s: fixed  # noqa: E731
    else:
        kw = parse_gen(ns.gen)
        graph_for = lambda s: _gen(kw, s)  # noqa: E731
    base = {k: v for k, v in _params(ns).items() if v is not None}
    rows = sweep_rows(graph_for, ns.algo, base, grid, seeds, ns.workers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algo"] + keys + SWEEP_COLUMNS)
    for row in rows:
        w.writerow([ns.algo] + [row.get(k, "") for k in keys] + [row[c] for c in SWEEP_COLUMNS])
    _write(buf.getvalue(), ns.out, f"sweep-{ns.algo}.csv")
    return 0


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    handler = {"generate": cmd_generate, "run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}[ns.cmd]
    try:
        return handler(ns)
    except (CliError, GraphValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
