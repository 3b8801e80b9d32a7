"""Residual-based estimation of a single solution component.

The state is a residual ``r`` (initially ``e_i``) and a scalar estimate
(initially 0). Updating coordinate ``u`` with ``rho = r_u``:

1. ``r_u <- G_uu * rho``
2. ``estimate += rho * z_u``
3. ``r_v += G_uv * rho`` for every other out-neighbour ``v`` of ``u``

Every update preserves ``estimate + r . x == x_i`` for the true solution,
so ``|estimate - x_i| <= ||r||_2 ||x||_2`` at all times.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .sparse_core import Norms, ResidualVector, SparseVector, norms, transpose_apply
from .systems import FixedPointSystem


class Status(str, enum.Enum):
    CONTINUE = "continue"
    TERMINATED = "terminated"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass
class CostLedger:
    tasks: int = 0
    dfs_reads: int = 0
    dfs_writes: int = 0
    multiplications: int = 0
    # reads per task -> number of tasks
    access_histogram: Counter = field(default_factory=Counter)

    def charge_task(self, row_nnz: int) -> None:
        cost = 1 + row_nnz
        self.tasks += 1
        self.dfs_reads += cost
        self.dfs_writes += cost
        self.multiplications += cost
        self.access_histogram[cost] += 1

    def charge_noop(self) -> None:
        self.tasks += 1
        self.access_histogram[0] += 1


@dataclass(frozen=True)
class TerminationRule:
    epsilon: float
    norm_kind: str = "l2"
    max_tasks: int = 10_000_000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.norm_kind not in ("l1", "l2", "linf"):
            raise ValueError(f"unknown norm {self.norm_kind!r}")
        if self.max_tasks < 0:
            raise ValueError("max_tasks must be >= 0")


@dataclass
class ResidualState:
    r: ResidualVector
    target: int
    estimate: float = 0.0
    ledger: CostLedger = field(default_factory=CostLedger)

    @property
    def tasks_done(self) -> int:
        return self.ledger.tasks

    def residual(self) -> SparseVector:
        return self.r.to_sparse()


@dataclass(frozen=True)
class TraceRecord:
    task_index: int
    coordinate: int  # -1 for a padded no-op tick
    r_l0: int
    r_l1: float
    r_l2: float
    r_linf: float
    estimate: float
    dfs_reads_cum: int
    dfs_writes_cum: int
    multiplications_cum: int
    worker_id: Optional[int] = None
    in_flight_count: Optional[int] = None


TraceSink = Callable[[TraceRecord], None]


@dataclass
class SolveResult:
    estimate: float
    norms: Norms
    ledger: CostLedger
    status: Status
    target: int
    residual: SparseVector

    @property
    def tasks(self) -> int:
        return self.ledger.tasks


class TickType:
    """Marker returned by a scheduler for a padded no-op draw."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "TICK"


TICK = TickType()


def init_state(system: FixedPointSystem, i: int) -> ResidualState:
    if not 0 <= i < system.n:
        raise IndexError(f"target {i} out of range for n={system.n}")
    r = ResidualVector(system.n)
    r.set(i, 1.0)
    return ResidualState(r=r, target=i)


def apply_update_task(state: ResidualState, system: FixedPointSystem, u: int) -> ResidualState:
    if not 0 <= u < system.n:
        raise IndexError(f"coordinate {u} out of range for n={system.n}")
    r = state.r
    rho = r.get(u)
    if rho == 0.0:
        state.ledger.charge_noop()
        return state
    G = system.G
    r.set(u, G.diagonal(u) * rho)
    state.estimate += rho * float(system.z[u])
    cols, vals = G.offdiag_row(u)
    r.add_many(cols, vals * rho)
    state.ledger.charge_task(G.row_nnz(u))
    return state


def synchronous_iteration(state: ResidualState, system: FixedPointSystem) -> ResidualState:
    """One full step: ``estimate += z . r`` then ``r <- G^T r``."""
    r = state.r.to_sparse()
    if r.l0 == 0:
        return state
    ledger = state.ledger
    state.estimate += r.dot(system.z)
    new_r = transpose_apply(system.G, r, ledger)
    ledger.multiplications += r.l0
    for u in r.indices.tolist():
        cost = 1 + system.G.row_nnz(u)
        ledger.tasks += 1
        ledger.dfs_reads += cost
        ledger.dfs_writes += cost
        ledger.access_histogram[cost] += 1
    state.r = ResidualVector.from_sparse(new_r)
    return state


def residual_norm(state: ResidualState, kind: str) -> float:
    nm = norms(state.r)
    return {"l1": nm.l1, "l2": nm.l2, "linf": nm.linf}[kind]


def check_termination(state: ResidualState, rule: TerminationRule) -> Status:
    if residual_norm(state, rule.norm_kind) < rule.epsilon:
        return Status.TERMINATED
    if state.tasks_done >= rule.max_tasks:
        return Status.BUDGET_EXHAUSTED
    return Status.CONTINUE


def make_record(state: ResidualState, coordinate: int, **extra) -> TraceRecord:
    nm = norms(state.r)
    lg = state.ledger
    return TraceRecord(
        lg.tasks, coordinate, nm.l0, nm.l1, nm.l2, nm.linf, state.estimate,
        lg.dfs_reads, lg.dfs_writes, lg.multiplications, **extra,
    )


def finish(state: ResidualState, status: Status) -> SolveResult:
    return SolveResult(state.estimate, norms(state.r), state.ledger, status, state.target, state.r.to_sparse())


def run(
    system: FixedPointSystem,
    i: int,
    scheduler,
    rule: TerminationRule,
    trace_sink: TraceSink | None = None,
) -> SolveResult:
    """Asynchronous-order solve executed sequentially, one task at a time."""
    state = init_state(system, i)
    while True:
        status = check_termination(state, rule)
        if status is not Status.CONTINUE:
            return finish(state, status)
        u = scheduler.next_coordinate(state.r, state.tasks_done)
        if u is TICK:
            state.ledger.charge_noop()
            u = -1
        else:
            apply_update_task(state, system, u)
        if trace_sink is not None:
            trace_sink(make_record(state, u))


def run_synchronous(
    system: FixedPointSystem,
    i: int,
    rule: TerminationRule,
    trace_sink: TraceSink | None = None,
) -> tuple[SolveResult, int]:
    """Synchronous solve, checking termination between iterations.

    Returns the result and the number of iterations performed. One trace
    record is emitted per iteration (coordinate column is -1).
    """
    state = init_state(system, i)
    iterations = 0
    while True:
        status = check_termination(state, rule)
        if status is not Status.CONTINUE:
            return finish(state, status), iterations
        synchronous_iteration(state, system)
        iterations += 1
        if trace_sink is not None:
            trace_sink(make_record(state, -1))


def run_stationary_baseline(
    system: FixedPointSystem,
    i: int,
    iterations: int,
    trace_sink: TraceSink | None = None,
) -> tuple[float, CostLedger]:
    """Full-vector iteration ``x <- Gx + z`` from ``x = 0``, reporting ``x[i]``.

    Every iteration costs ``n`` coordinate tasks, task ``u`` costing
    ``|N_u| + 1`` multiplications.
    """
    G, z = system.G, system.z
    row_cost = np.diff(G.indptr) + 1
    per_iter = int(row_cost.sum())
    hist = Counter(row_cost.tolist())
    ledger = CostLedger()
    x = np.zeros(system.n)
    for _ in range(iterations):
        x = G.matvec(x) + z
        ledger.tasks += system.n
        ledger.dfs_reads += per_iter
        ledger.dfs_writes += per_iter
        ledger.multiplications += per_iter
        for k, c in hist.items():
            ledger.access_histogram[k] += c
        if trace_sink is not None:
            trace_sink(TraceRecord(ledger.tasks, -1, system.n, float("nan"), float("nan"), float("nan"),
                                   float(x[i]), ledger.dfs_reads, ledger.dfs_writes, ledger.multiplications))
    return float(x[i]), ledger


def invariant_gap(state: ResidualState, x_true) -> float:
    x_true = np.asarray(x_true, dtype=np.float64)
    return abs(state.estimate + state.r.dot(x_true) - x_true[state.target])
