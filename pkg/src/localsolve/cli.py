"""Command line front end: ``localsolve {solve,compare,gen,oracle}``.

Every flag can also come from an INI file passed with ``--config``; keys
live in an ``[experiment]`` section and use the flag names (dashes or
underscores). Flags given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .async_sim import SimConfig, simulate
from .oracle import dense_solve
from .schedulers import KINDS, make_policy
from .sparse_core import SparseMatrix
from .solver import (
    SolveResult,
    Status,
    TerminationRule,
    TraceRecord,
    run,
    run_stationary_baseline,
    run_synchronous,
)
from .systems import (
    FixedPointSystem,
    GraphSpec,
    LinearSystem,
    bonacich_system,
    degree_summary,
    generate_graph,
    jacobi_transform,
    load_matrix_market,
    load_vector,
    pagerank_system,
    parse_graph_spec,
    richardson_optimal_gamma,
    richardson_transform,
    row_normalize,
    save_matrix_market,
    save_vector,
)

log = logging.getLogger("localsolve")

EXIT_OK, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2

TRACE_COLUMNS = [
    "task_index", "coordinate", "r_l0", "r_l1", "r_l2", "r_linf", "estimate",
    "dfs_reads_cum", "dfs_writes_cum", "multiplications_cum",
]
SIM_COLUMNS = ["worker_id", "in_flight_count"]
ERROR_COLUMNS = ["abs_error", "rel_error"]
SUMMARY_COLUMNS = [
    "method", "runs", "terminated", "median_tasks", "median_multiplications",
    "median_abs_error", "median_rel_error",
]
RUN_COLUMNS = [
    "method", "replication", "seed", "status", "tasks", "multiplications",
    "estimate", "abs_error", "rel_error",
]
BASELINES = ("synchronous", "stationary_baseline")
DEFAULT_PAGERANK_ALPHA = 0.15

# flag -> (type, default); None default means "unset"
OPTIONS: dict[str, tuple[Any, Any]] = {
    "system": (str, None),
    "z": (str, None),
    "matrix": (str, None),
    "rhs": (str, None),
    "transform": (str, "jacobi"),
    "graph": (str, None),
    "centrality": (str, "bonacich"),
    "alpha": (float, None),
    "gamma": (float, None),
    "target_i": (int, 0),
    "scheduler": (str, "round_robin_neighborhood"),
    "seed": (int, 0),
    "epsilon": (float, 1e-6),
    "norm": (str, "l2"),
    "max_tasks": (int, 10_000_000),
    "workers": (int, None),
    "atomicity": (str, None),
    "interleave_seed": (int, None),
    "replications": (int, 1),
    "out": (str, None),
    "oracle": (bool, False),
    "trace_stride": (int, 1),
}


class CliError(Exception):
    pass


# -- config ----------------------------------------------------------------


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise CliError(f"not a boolean: {v!r}")


def read_config(path) -> dict[str, Any]:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise CliError(f"cannot read config file {path}")
    out: dict[str, Any] = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            name = key.replace("-", "_")
            if name not in OPTIONS:
                raise CliError(f"{path}: unknown key {key!r} in [{section}]")
            typ = OPTIONS[name][0]
            try:
                out[name] = _to_bool(raw) if typ is bool else typ(raw)
            except ValueError:
                raise CliError(f"{path}: bad value for {key}: {raw!r}") from None
    return out


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge built-in defaults, the config file, then explicit flags."""
    cfg = {k: d for k, (_, d) in OPTIONS.items()}
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for k in OPTIONS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["norm"] not in ("l1", "l2", "linf"):
        raise CliError(f"--norm must be l1, l2 or linf, not {cfg['norm']!r}")
    if cfg["trace_stride"] < 1:
        raise CliError("--trace-stride must be >= 1")
    if cfg["replications"] < 1:
        raise CliError("--replications must be >= 1")
    return cfg


# -- system construction -----------------------------------------------------


def _graph(source: str, seed: int | None) -> SparseMatrix:
    if Path(source).suffix == ".mtx" or Path(source).exists():
        return load_matrix_market(source)
    spec = parse_graph_spec(source)
    if seed is not None:
        spec = spec.with_seed(seed)
    return generate_graph(spec)


def build_system(cfg: dict[str, Any], graph_seed: int | None = None) -> FixedPointSystem:
    """Construct the fixed-point system described by ``cfg``.

    ``graph_seed`` overrides the generator seed (used by compare to draw a
    fresh graph per replication).
    """
    sources = [k for k in ("system", "matrix", "graph") if cfg[k]]
    if len(sources) != 1:
        raise CliError("give exactly one of --system, --matrix or --graph")
    if cfg["system"]:
        G = load_matrix_market(cfg["system"])
        if not cfg["z"]:
            raise CliError("--system needs --z")
        return FixedPointSystem(G, load_vector(cfg["z"]), {"source": "files"})
    if cfg["matrix"]:
        if not cfg["rhs"]:
            raise CliError("--matrix needs --rhs")
        lin = LinearSystem(load_matrix_market(cfg["matrix"]), load_vector(cfg["rhs"]))
        if cfg["transform"] == "jacobi":
            return jacobi_transform(lin)
        if cfg["transform"] == "richardson":
            gamma = cfg["gamma"] if cfg["gamma"] is not None else richardson_optimal_gamma(lin.A)
            return richardson_transform(lin, gamma)
        raise CliError(f"--transform must be jacobi or richardson, not {cfg['transform']!r}")
    adj = _graph(cfg["graph"], graph_seed)
    if cfg["centrality"] == "bonacich":
        return bonacich_system(adj, cfg["alpha"])
    if cfg["centrality"] == "pagerank":
        alpha = DEFAULT_PAGERANK_ALPHA if cfg["alpha"] is None else cfg["alpha"]
        return pagerank_system(row_normalize(adj), alpha)
    raise CliError(f"--centrality must be pagerank or bonacich, not {cfg['centrality']!r}")


def _graph_is_generated(cfg) -> bool:
    return bool(cfg["graph"]) and not (Path(cfg["graph"]).suffix == ".mtx" or Path(cfg["graph"]).exists())


# -- traces ----------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


class TraceWriter:
    """CSV sink for trace records; keeps every ``stride``-th row plus the last."""

    def __init__(self, path, sim: bool = False, x_i: float | None = None, x_norm: float | None = None,
                 stride: int = 1):
        self.fh = open(path, "w", newline="")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.sim = sim
        self.x_i, self.x_norm = x_i, x_norm
        self.stride = stride
        self.pending: TraceRecord | None = None
        header = list(TRACE_COLUMNS)
        if sim:
            header += SIM_COLUMNS
        if x_i is not None:
            header += ERROR_COLUMNS
        self.w.writerow(header)

    def _row(self, rec: TraceRecord) -> list[str]:
        row = [rec.task_index, rec.coordinate, rec.r_l0, rec.r_l1, rec.r_l2, rec.r_linf, rec.estimate,
               rec.dfs_reads_cum, rec.dfs_writes_cum, rec.multiplications_cum]
        if self.sim:
            row += [rec.worker_id, rec.in_flight_count]
        if self.x_i is not None:
            err = abs(rec.estimate - self.x_i)
            row += [err, err / self.x_norm if self.x_norm else math.nan]
        return [_fmt(v) for v in row]

    def __call__(self, rec: TraceRecord) -> None:
        if rec.task_index % self.stride == 0:
            self.w.writerow(self._row(rec))
            self.pending = None
        else:
            self.pending = rec

    def close(self) -> None:
        if self.pending is not None:
            self.w.writerow(self._row(self.pending))
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# -- commands ----------------------------------------------------------------


@dataclass
class Truth:
    x: np.ndarray
    x_i: float
    norm: float


def _truth(system: FixedPointSystem, i: int) -> Truth:
    sol = dense_solve(system)
    return Truth(sol.x, float(sol.x[i]), sol.norm)


def _rule(cfg) -> TerminationRule:
    return TerminationRule(cfg["epsilon"], cfg["norm"], cfg["max_tasks"])


def _sim_mode(cfg) -> bool:
    return cfg["workers"] is not None or cfg["atomicity"] is not None


def _sim_config(cfg, seed: int) -> SimConfig:
    atom = {"task": "task_atomic", "step1": "step1_atomic", None: "task_atomic"}
    a = cfg["atomicity"]
    if a not in atom and a not in ("task_atomic", "step1_atomic"):
        raise CliError(f"--atomicity must be task or step1, not {a!r}")
    iseed = cfg["interleave_seed"] if cfg["interleave_seed"] is not None else seed
    return SimConfig(workers=cfg["workers"] or 1, atomicity=atom.get(a, a), interleave_seed=iseed)


def _solve_once(system, cfg, scheduler: str, seed: int, trace_path, truth: Truth | None) -> SolveResult:
    i = cfg["target_i"]
    policy = make_policy(scheduler, system.G, i, seed)
    sim = _sim_mode(cfg)
    sink = None
    if trace_path is not None:
        sink = TraceWriter(trace_path, sim=sim, x_i=truth.x_i if truth else None,
                           x_norm=truth.norm if truth else None, stride=cfg["trace_stride"])
    try:
        if sim:
            return simulate(system, i, policy, _rule(cfg), _sim_config(cfg, seed), trace_sink=sink)
        return run(system, i, policy, _rule(cfg), trace_sink=sink)
    finally:
        if sink is not None:
            sink.close()


def _errors(estimate: float, truth: Truth | None) -> tuple[float | None, float | None]:
    if truth is None:
        return None, None
    err = abs(estimate - truth.x_i)
    return err, (err / truth.norm if truth.norm else math.nan)


def summary_line(res: SolveResult, truth: Truth | None) -> str:
    parts = [
        f"status={res.status.value}",
        f"tasks={res.ledger.tasks}",
        f"multiplications={res.ledger.multiplications}",
        f"estimate={res.estimate!r}",
        f"r_l0={res.norms.l0}",
        f"r_l1={res.norms.l1!r}",
        f"r_l2={res.norms.l2!r}",
        f"r_linf={res.norms.linf!r}",
    ]
    abs_err, rel_err = _errors(res.estimate, truth)
    if abs_err is not None:
        parts += [f"abs_error={abs_err!r}", f"rel_error={rel_err!r}", f"x_norm={truth.norm!r}"]
    return " ".join(parts)


def cmd_solve(cfg: dict[str, Any]) -> int:
    system = build_system(cfg)
    if not 0 <= cfg["target_i"] < system.n:
        raise CliError(f"--target-i {cfg['target_i']} out of range for n={system.n}")
    truth = _truth(system, cfg["target_i"]) if cfg["oracle"] else None
    scheduler = cfg["scheduler"]
    if scheduler not in KINDS:
        raise CliError(f"unknown scheduler {scheduler!r}; choose from {', '.join(KINDS)}")
    res = _solve_once(system, cfg, scheduler, cfg["seed"], cfg["out"], truth)
    print(summary_line(res, truth))
    return EXIT_OK if res.status is Status.TERMINATED else EXIT_BUDGET


def _median(vals):
    vals = [v for v in vals if v is not None]
    return float(np.median(vals)) if vals else None


def cmd_compare(cfg: dict[str, Any]) -> int:
    scheds = [s.strip() for s in cfg["scheduler"].split(",") if s.strip()]
    if len(scheds) < 2:
        raise CliError("compare needs at least 2 schedulers (comma separated --scheduler)")
    for s in scheds:
        if s not in KINDS:
            raise CliError(f"unknown scheduler {s!r}; choose from {', '.join(KINDS)}")
    if len(set(scheds)) != len(scheds):
        raise CliError("duplicate scheduler in --scheduler")
    if not cfg["out"]:
        raise CliError("compare needs --out DIR")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    methods = scheds + list(BASELINES)
    runs: list[list] = []
    per_method: dict[str, list[tuple]] = {m: [] for m in methods}
    regen = _graph_is_generated(cfg)
    rule = _rule(cfg)
    i = cfg["target_i"]
    if _sim_mode(cfg):
        raise CliError("compare runs the sequential solver; drop --workers/--atomicity")

    for k in range(cfg["replications"]):
        seed = cfg["seed"] + k
        system = build_system(cfg, graph_seed=seed if regen else None)
        if not 0 <= i < system.n:
            raise CliError(f"--target-i {i} out of range for n={system.n}")
        truth = _truth(system, i) if cfg["oracle"] else None
        log.info("replication %d (seed %d): n=%d nnz=%d", k, seed, system.n, system.G.nnz)
        for s in scheds:
            res = _solve_once(system, cfg, s, seed, out / f"trace_{s}_seed{seed}.csv", truth)
            per_method[s].append((res.status, res.ledger.tasks, res.ledger.multiplications, res.estimate))
        with TraceWriter(out / f"trace_synchronous_seed{seed}.csv", x_i=truth.x_i if truth else None,
                         x_norm=truth.norm if truth else None, stride=1) as sink:
            sres, iters = run_synchronous(system, i, rule, trace_sink=sink)
        per_method["synchronous"].append((sres.status, sres.ledger.tasks, sres.ledger.multiplications,
                                          sres.estimate))
        # the full-vector iterate after t steps equals the synchronous estimate after t
        # iterations, so it is charged the same number of sweeps
        with TraceWriter(out / f"trace_stationary_baseline_seed{seed}.csv", x_i=truth.x_i if truth else None,
                         x_norm=truth.norm if truth else None, stride=1) as sink:
            bx, bledger = run_stationary_baseline(system, i, iters, trace_sink=sink)
        per_method["stationary_baseline"].append((sres.status, bledger.tasks, bledger.multiplications, bx))
        for m in methods:
            status, tasks, mults, est = per_method[m][-1]
            abs_err, rel_err = _errors(est, truth)
            runs.append([m, k, seed, status.value, tasks, mults, est, abs_err, rel_err])

    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for row in runs:
            w.writerow([_fmt(v) for v in row])
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for m in methods:
            rows = [r for r in runs if r[0] == m]
            w.writerow([_fmt(v) for v in [
                m, len(rows), sum(r[3] == Status.TERMINATED.value for r in rows),
                _median([r[4] for r in rows]), _median([r[5] for r in rows]),
                _median([r[7] for r in rows]), _median([r[8] for r in rows]),
            ]])
    print(f"wrote {out / 'summary.csv'}")
    for m in methods:
        tasks = _median([r[4] for r in runs if r[0] == m])
        print(f"{m:28s} median_tasks={tasks!r}")
    all_done = all(r[3] == Status.TERMINATED.value for r in runs)
    return EXIT_OK if all_done else EXIT_BUDGET


def cmd_gen(cfg: dict[str, Any]) -> int:
    if not cfg["graph"]:
        raise CliError("gen needs --graph SPEC")
    if not cfg["out"]:
        raise CliError("gen needs --out PATH")
    spec: GraphSpec = parse_graph_spec(cfg["graph"])
    adj = generate_graph(spec)
    save_matrix_market(adj, cfg["out"])
    s = degree_summary(adj)
    print(f"n={s['n']} edges={s['edges']} max_degree={s['max_degree']} avg_degree={s['avg_degree']!r}")
    return EXIT_OK


def cmd_oracle(cfg: dict[str, Any]) -> int:
    if not cfg["out"]:
        raise CliError("oracle needs --out PATH")
    system = build_system(cfg)
    sol = dense_solve(system)
    save_vector(sol.x, cfg["out"])
    print(f"n={system.n} residual_norm={sol.residual_norm!r} x_norm={sol.norm!r} method={sol.method}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "compare": cmd_compare, "gen": cmd_gen, "oracle": cmd_oracle}


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("system")
    g.add_argument("--config", help="INI file with default values for any flag")
    g.add_argument("--system", help="Matrix Market file holding G")
    g.add_argument("--z", help="vector file holding z (with --system)")
    g.add_argument("--matrix", help="Matrix Market file holding A")
    g.add_argument("--rhs", help="vector file holding b (with --matrix)")
    g.add_argument("--transform", choices=["jacobi", "richardson"])
    g.add_argument("--graph", help="graph spec (er:n=..,p=..,seed=.. | powerlaw:n=..,exponent=..,seed=..) or .mtx")
    g.add_argument("--centrality", choices=["pagerank", "bonacich"])
    g.add_argument("--alpha", type=float)
    g.add_argument("--gamma", type=float, help="Richardson step (default: optimal for symmetric PD A)")
    r = common.add_argument_group("run")
    r.add_argument("--target-i", type=int)
    r.add_argument("--scheduler", help=f"one of {', '.join(KINDS)} (comma list for compare)")
    r.add_argument("--seed", type=int)
    r.add_argument("--epsilon", type=float)
    r.add_argument("--norm", choices=["l1", "l2", "linf"])
    r.add_argument("--max-tasks", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--atomicity", choices=["task", "step1"])
    r.add_argument("--interleave-seed", type=int)
    r.add_argument("--replications", type=int)
    r.add_argument("--out", help="trace CSV (solve), output dir (compare), file (gen, oracle)")
    r.add_argument("--oracle", action="store_const", const=True, default=None,
                   help="dense-solve for ground truth and report errors")
    r.add_argument("--trace-stride", type=int, help="keep every k-th trace row (plus the last)")
    r.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="localsolve", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="estimate one component and write a trace")
    sub.add_parser("compare", parents=[common], help="sweep schedulers over replications")
    sub.add_parser("gen", parents=[common], help="generate a random graph as Matrix Market")
    sub.add_parser("oracle", parents=[common], help="dense-solve a system to a vector file")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (CliError, ValueError, IndexError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
