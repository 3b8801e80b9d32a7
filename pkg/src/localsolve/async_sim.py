"""Logical simulation of workers sharing one residual vector.

A master hands coordinates to up to ``workers`` concurrent tasks. In
``task_atomic`` mode each task runs as one indivisible unit, which is the
same computation as :func:`localsolve.solver.run`. In ``step1_atomic`` mode
each task is split into micro-operations:

* ``read_set_ru``   read ``rho = r_u`` and write ``r_u = G_uu * rho`` (indivisible)
* ``add_estimate``  ``estimate += rho * z_u``
* ``add_neighbor``  ``r_v += G_uv * rho`` (one op per off-diagonal neighbour)

and a seeded RNG picks, at every step, uniformly among the next micro-op of
each in-flight task and (while dispatch is open) starting a new task.
Per-task program order is preserved. Dispatch closes every
``check_interval`` tasks until all in-flight tasks drain; termination is
checked only at those quiescent points.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .solver import (
    TICK,
    ResidualState,
    SolveResult,
    Status,
    TerminationRule,
    TraceSink,
    apply_update_task,
    check_termination,
    finish,
    init_state,
    make_record,
)
from .systems import FixedPointSystem

ATOMICITY = ("task_atomic", "step1_atomic")


@dataclass(frozen=True)
class SimConfig:
    workers: int = 1
    atomicity: str = "task_atomic"
    interleave_seed: int = 0
    max_tasks: int | None = None  # overrides the termination rule's cap when set
    check_interval: int | None = None  # default 4 * workers

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.atomicity not in ATOMICITY:
            raise ValueError(f"atomicity must be one of {ATOMICITY}")
        if self.check_interval is not None and self.check_interval < 1:
            raise ValueError("check_interval must be >= 1")


@dataclass(frozen=True)
class MicroOp:
    kind: str  # read_set_ru | add_estimate | add_neighbor
    task_id: int
    coordinate: int
    target: int  # neighbour for add_neighbor, else coordinate
    operand: float


@dataclass(frozen=True)
class LedgerReport:
    tasks: int
    dfs_reads: int
    dfs_writes: int
    multiplications: int
    access_histogram: dict[int, int]


class _Task:
    __slots__ = ("tid", "worker", "u", "rho", "step", "cols", "vals")

    def __init__(self, tid: int, worker: int, u: int):
        self.tid, self.worker, self.u = tid, worker, u
        self.rho = 0.0
        self.step = 0
        self.cols = self.vals = None


def _step(task: _Task, state: ResidualState, system: FixedPointSystem, op_sink) -> bool:
    """Execute the task's next micro-op. Returns True when the task is done."""
    r = state.r
    u = task.u
    if task.step == 0:
        rho = r.get(u)
        task.rho = rho
        if op_sink is not None:
            op_sink(MicroOp("read_set_ru", task.tid, u, u, rho))
        if rho == 0.0:
            state.ledger.charge_noop()
            return True
        r.set(u, system.G.diagonal(u) * rho)
        task.cols, task.vals = system.G.offdiag_row(u)
        task.step = 1
        return False
    if task.step == 1:
        state.estimate += task.rho * float(system.z[u])
        if op_sink is not None:
            op_sink(MicroOp("add_estimate", task.tid, u, u, task.rho))
    else:
        k = task.step - 2
        v = int(task.cols[k])
        r.add(v, task.vals[k] * task.rho)
        if op_sink is not None:
            op_sink(MicroOp("add_neighbor", task.tid, u, v, task.rho))
    task.step += 1
    if task.step - 2 >= len(task.cols):
        state.ledger.charge_task(system.G.row_nnz(u))
        return True
    return False


def simulate(
    system: FixedPointSystem,
    i: int,
    scheduler,
    rule: TerminationRule,
    cfg: SimConfig,
    trace_sink: TraceSink | None = None,
    on_quiescent: Callable[[ResidualState], None] | None = None,
    op_sink: Callable[[MicroOp], None] | None = None,
) -> SolveResult:
    """Run the solver under simulated concurrency; see the module docstring."""
    budget = rule.max_tasks if cfg.max_tasks is None else cfg.max_tasks
    state = init_state(system, i)
    if cfg.atomicity == "task_atomic":
        return _sequential(system, state, scheduler, rule, budget, cfg.workers, trace_sink, on_quiescent)
    return _interleaved(system, state, scheduler, rule, budget, cfg, trace_sink, on_quiescent, op_sink)


def _status(state: ResidualState, rule: TerminationRule, dispatched: int, budget: int) -> Status:
    st = check_termination(state, rule)
    if st is Status.TERMINATED:
        return st
    return Status.BUDGET_EXHAUSTED if dispatched >= budget else Status.CONTINUE


def _sequential(system, state, scheduler, rule, budget, workers, trace_sink, on_quiescent) -> SolveResult:
    while True:
        if on_quiescent is not None:
            on_quiescent(state)
        status = _status(state, rule, state.tasks_done, budget)
        if status is not Status.CONTINUE:
            return finish(state, status)
        worker = state.tasks_done % workers
        u = scheduler.next_coordinate(state.r, state.tasks_done)
        if u is TICK:
            state.ledger.charge_noop()
            u = -1
        else:
            apply_update_task(state, system, u)
        if trace_sink is not None:
            trace_sink(make_record(state, u, worker_id=worker, in_flight_count=0))


def _interleaved(system, state, scheduler, rule, budget, cfg, trace_sink, on_quiescent, op_sink) -> SolveResult:
    rng = np.random.default_rng(cfg.interleave_seed)
    interval = cfg.check_interval or 4 * cfg.workers
    in_flight: list[_Task] = []
    free = list(range(cfg.workers))
    dispatched = 0
    since_check = 0
    while True:
        if not in_flight:
            if on_quiescent is not None:
                on_quiescent(state)
            status = _status(state, rule, dispatched, budget)
            if status is not Status.CONTINUE:
                return finish(state, status)
            since_check = 0
        can_dispatch = bool(free) and since_check < interval and dispatched < budget and state.r.l0 > 0
        n_actions = len(in_flight) + (1 if can_dispatch else 0)
        pick = int(rng.integers(n_actions))
        if pick == len(in_flight):
            u = scheduler.next_coordinate(state.r, dispatched)
            dispatched += 1
            since_check += 1
            worker = min(free)
            if u is TICK:
                state.ledger.charge_noop()
                if trace_sink is not None:
                    trace_sink(make_record(state, -1, worker_id=worker, in_flight_count=len(in_flight)))
                continue
            free.remove(worker)
            in_flight.append(_Task(dispatched - 1, worker, u))
            continue
        task = in_flight[pick]
        if _step(task, state, system, op_sink):
            in_flight.pop(pick)
            free.append(task.worker)
            if trace_sink is not None:
                trace_sink(make_record(state, task.u, worker_id=task.worker, in_flight_count=len(in_flight)))


def ledger_report(result: SolveResult) -> LedgerReport:
    lg = result.ledger
    return LedgerReport(lg.tasks, lg.dfs_reads, lg.dfs_writes, lg.multiplications,
                        dict(sorted(Counter(lg.access_histogram).items())))
