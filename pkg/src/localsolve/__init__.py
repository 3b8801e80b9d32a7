"""Local residual-push estimation of one component of ``x = Gx + z``."""

from .async_sim import LedgerReport, MicroOp, SimConfig, ledger_report, simulate
from .schedulers import KINDS as SCHEDULER_KINDS
from .schedulers import WalkCoverage, make_policy, sl_tracker
from .solver import (
    TICK,
    CostLedger,
    ResidualState,
    SolveResult,
    Status,
    TerminationRule,
    TraceRecord,
    apply_update_task,
    check_termination,
    init_state,
    invariant_gap,
    run,
    run_stationary_baseline,
    run_synchronous,
    synchronous_iteration,
)
from .sparse_core import (
    Norms,
    ResidualVector,
    SparseMatrix,
    SparseVector,
    entrywise_abs,
    norms,
    operator_norm_estimate,
    transpose_apply,
)
from .systems import (
    FixedPointSystem,
    GraphSpec,
    LinearSystem,
    bonacich_system,
    generate_graph,
    jacobi_transform,
    load_matrix_market,
    pagerank_system,
    richardson_optimal_gamma,
    richardson_transform,
    save_matrix_market,
)

__version__ = "0.1.0"
