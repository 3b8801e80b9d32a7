import math

import numpy as np
import pytest

from localsolve.async_sim import SimConfig, ledger_report, simulate
from localsolve.oracle import dense_solve, neighborhood_balls, walk_sum_bruteforce
from localsolve.schedulers import KINDS, CyclicNonzero, Recorder, make_policy, sl_tracker
from localsolve.solver import Status, TerminationRule, run, run_synchronous
from localsolve.sparse_core import SparseMatrix
from localsolve.systems import FixedPointSystem, GraphSpec, bonacich_system, generate_graph
from sysgen import random_system

CORE = ("task_index", "coordinate", "r_l0", "r_l1", "r_l2", "r_linf", "estimate",
        "dfs_reads_cum", "dfs_writes_cum", "multiplications_cum")
TWO_CYCLE_BONACICH = bonacich_system(SparseMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]]), 0.5)


def core(recs):
    return [tuple(getattr(r, f) for f in CORE) for r in recs]


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(workers=0)
    with pytest.raises(ValueError):
        SimConfig(atomicity="whatever")
    with pytest.raises(ValueError):
        SimConfig(check_interval=0)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("cfg", [
    SimConfig(workers=1, atomicity="task_atomic"),
    SimConfig(workers=1, atomicity="step1_atomic", interleave_seed=7),
    SimConfig(workers=4, atomicity="task_atomic"),
])
def test_equivalent_to_sequential_run(kind, cfg):
    system = random_system(np.random.default_rng(12), 30)
    rule = TerminationRule(1e-6, max_tasks=50_000)
    a, b = [], []
    ra = run(system, 2, make_policy(kind, system.G, 2, seed=3), rule, a.append)
    rb = simulate(system, 2, make_policy(kind, system.G, 2, seed=3), rule, cfg, b.append)
    assert core(a) == core(b)
    assert ra.estimate == rb.estimate and ra.status is rb.status
    assert ra.ledger == rb.ledger


def test_sim_trace_columns():
    recs = []
    simulate(TWO_CYCLE_BONACICH, 0, CyclicNonzero(2), TerminationRule(1e-3), SimConfig(workers=3), recs.append)
    assert all(r.in_flight_count == 0 and 0 <= r.worker_id < 3 for r in recs)
    recs = []
    simulate(TWO_CYCLE_BONACICH, 0, CyclicNonzero(2), TerminationRule(1e-3),
             SimConfig(workers=3, atomicity="step1_atomic"), recs.append)
    assert all(0 <= r.in_flight_count < 3 and 0 <= r.worker_id < 3 for r in recs)


@pytest.mark.parametrize("seed", range(100))
def test_two_cycle_step1_four_workers(seed):
    res = simulate(TWO_CYCLE_BONACICH, 0, CyclicNonzero(2), TerminationRule(1e-8),
                   SimConfig(workers=4, atomicity="step1_atomic", interleave_seed=seed))
    assert res.status is Status.TERMINATED
    assert abs(res.estimate - 2.0) <= 1e-8 * math.sqrt(8)


@pytest.fixture(scope="module")
def mixed20():
    rng = np.random.default_rng(2020)
    system = random_system(rng, 20, abs_norm=0.9, density=0.25)
    return system, dense_solve(system).x


@pytest.mark.parametrize("seed", range(100))
def test_mixed_sign_step1_converges(mixed20, seed):
    system, x = mixed20
    eps = 1e-6
    gaps = []

    def check(state):
        gaps.append(abs(state.estimate + state.r.dot(x) - x[5]))

    res = simulate(system, 5, CyclicNonzero(20), TerminationRule(eps),
                   SimConfig(workers=1 + seed % 8, atomicity="step1_atomic", interleave_seed=seed),
                   on_quiescent=check)
    assert res.status is Status.TERMINATED
    assert abs(res.estimate - x[5]) <= eps * np.linalg.norm(x)
    assert max(gaps) <= 1e-9


def test_micro_ops_program_order_and_interleaving():
    system = random_system(np.random.default_rng(3), 15, density=0.3)
    ops = []
    simulate(system, 0, CyclicNonzero(15), TerminationRule(1e-6),
             SimConfig(workers=4, atomicity="step1_atomic", interleave_seed=1), op_sink=ops.append)
    by_task = {}
    for op in ops:
        by_task.setdefault(op.task_id, []).append(op)
    for task_ops in by_task.values():
        assert task_ops[0].kind == "read_set_ru"
        assert all(op.kind != "read_set_ru" for op in task_ops[1:])
        if len(task_ops) > 1:
            assert task_ops[1].kind == "add_estimate"
            assert all(op.kind == "add_neighbor" for op in task_ops[2:])
            u = task_ops[0].coordinate
            assert [op.target for op in task_ops[2:]] == system.G.offdiag_row(u)[0].tolist()
    # ops of different tasks really do interleave
    switches = sum(a.task_id != b.task_id for a, b in zip(ops, ops[1:]))
    assert switches > len(by_task)


def test_step1_duplicate_dispatch_is_noop():
    # two workers both handed coordinate 0: the second reads r_0 after the first reset it
    recs = []
    res = simulate(FixedPointSystem(SparseMatrix.zeros(1), [3.0]), 0, CyclicNonzero(1), TerminationRule(1e-9),
                   SimConfig(workers=2, atomicity="step1_atomic", interleave_seed=0), recs.append)
    assert res.estimate == 3.0
    assert res.status is Status.TERMINATED


def test_budget_exhaustion():
    res = simulate(TWO_CYCLE_BONACICH, 0, CyclicNonzero(2), TerminationRule(1e-12),
                   SimConfig(workers=3, atomicity="step1_atomic", max_tasks=10))
    assert res.status is Status.BUDGET_EXHAUSTED
    assert res.tasks == 10


def test_ledger_single_update():
    G = SparseMatrix.from_dense([[0.0, 0.1, 0.1, 0.1], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])
    system = FixedPointSystem(G, np.ones(4))
    res = simulate(system, 0, CyclicNonzero(4), TerminationRule(1e-9, max_tasks=1), SimConfig())
    rep = ledger_report(res)
    assert (rep.tasks, rep.dfs_reads, rep.dfs_writes) == (1, 4, 4)
    assert rep.access_histogram == {4: 1}


def test_ledger_zero_matrix():
    system = FixedPointSystem(SparseMatrix.zeros(3), np.ones(3))
    rep = ledger_report(simulate(system, 1, CyclicNonzero(3), TerminationRule(1e-9), SimConfig(workers=2)))
    assert (rep.tasks, rep.dfs_reads, rep.dfs_writes, rep.multiplications) == (1, 1, 1, 1)


def test_ledger_histogram_matches_degrees():
    system = random_system(np.random.default_rng(4), 25, density=0.2)
    recorder = Recorder(CyclicNonzero(25))
    res = simulate(system, 0, recorder, TerminationRule(1e-6), SimConfig(workers=2))
    rep = ledger_report(res)
    expect = {}
    for u in recorder.sequence:
        c = 1 + system.G.row_nnz(u)
        expect[c] = expect.get(c, 0) + 1
    assert rep.access_histogram == dict(sorted(expect.items()))
    assert rep.dfs_reads == rep.dfs_writes == sum(k * v for k, v in expect.items())


@pytest.mark.parametrize("seed", range(3))
def test_synchronous_tasks_within_neighborhood_sum(seed):
    adj = generate_graph(GraphSpec("erdos_renyi", 300, p=0.01, seed=seed))
    system = bonacich_system(adj)
    res, t = run_synchronous(system, 0, TerminationRule(1e-6))
    balls = neighborhood_balls(system.G, 0, t)
    assert res.tasks <= sum(len(balls[k]) for k in range(t))


@pytest.mark.parametrize("seed", range(20))
def test_walk_conservation_tiny(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    system = random_system(rng, n, abs_norm=0.8, signs="nonneg", z_kind="nonneg", density=0.6)
    x = dense_solve(system).x
    i = 0

    def check(state):
        # nonnegative weights: a double-counted walk would push the estimate past x_i
        assert abs(state.estimate + state.r.dot(x) - x[i]) <= 1e-12
        assert state.estimate <= x[i] + 1e-12
        assert np.all(state.r.values >= 0)

    simulate(system, i, CyclicNonzero(n), TerminationRule(1e-10),
             SimConfig(workers=3, atomicity="step1_atomic", interleave_seed=seed), on_quiescent=check)

    # sequential execution: after S_l the estimate contains every walk of length <= l
    rec = Recorder(CyclicNonzero(n))
    est = [0.0]
    simulate(system, i, rec, TerminationRule(1e-10), SimConfig(workers=2),
             trace_sink=lambda r: est.append(r.estimate))
    cov = sl_tracker(rec.sequence, system.G, i, max_level=6)
    for l, s in enumerate(cov.s_values):
        if s == math.inf:
            break
        assert est[int(s)] >= walk_sum_bruteforce(system, i, l) - 1e-12
