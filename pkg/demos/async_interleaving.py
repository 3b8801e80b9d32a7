"""Several workers updating the same residual with only the read-and-reset step atomic.

Each worker grabs r_u and zeroes it in one step, then pushes the mass to
the neighbours a piece at a time. Other workers run in between. The sum
estimate + r . x still equals x_i whenever nothing is in flight.

Run: python3 demos/async_interleaving.py
"""

import numpy as np

from localsolve import SimConfig, TerminationRule, simulate
from localsolve.oracle import dense_solve
from localsolve.schedulers import CyclicNonzero
from localsolve.sparse_core import SparseMatrix
from localsolve.systems import FixedPointSystem

rng = np.random.default_rng(3)
n = 30
G = rng.normal(size=(n, n)) * (rng.random((n, n)) < 0.15)
G *= 0.9 / np.linalg.norm(np.abs(G), 2)
system = FixedPointSystem(SparseMatrix.from_dense(G), rng.normal(size=n))
x = dense_solve(system).x

for workers in (1, 2, 4, 8):
    gaps = []
    res = simulate(system, 0, CyclicNonzero(n), TerminationRule(1e-8),
                   SimConfig(workers=workers, atomicity="step1_atomic", interleave_seed=workers),
                   on_quiescent=lambda s: gaps.append(abs(s.estimate + s.r.dot(x) - x[0])))
    print(f"workers={workers}: {res.status.value}, {res.tasks} tasks, "
          f"error {abs(res.estimate - x[0]):.1e}, worst quiescent gap {max(gaps):.1e}")
