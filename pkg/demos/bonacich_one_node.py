"""Estimate the Bonacich centrality of a single node without solving the whole system.

Run: python3 demos/bonacich_one_node.py
"""

import numpy as np

from localsolve import GraphSpec, TerminationRule, bonacich_system, generate_graph, make_policy, run
from localsolve.oracle import dense_solve
from localsolve.solver import run_synchronous

adj = generate_graph(GraphSpec("erdos_renyi", 2000, p=0.003, seed=1))
system = bonacich_system(adj)
x = dense_solve(system).x
target = 17
print(f"n={system.n}, alpha={system.meta['alpha']:.4f} ({system.meta['alpha_rule']}), exact x_i = {x[target]:.8f}")

for eps in (1e-2, 1e-4, 1e-6):
    rule = TerminationRule(eps)
    greedy = run(system, target, make_policy("greedy_max", system.G, target), rule)
    sync, iters = run_synchronous(system, target, rule)
    print(f"eps={eps:.0e}: greedy {greedy.ledger.multiplications:8d} mults, error {abs(greedy.estimate - x[target]):.1e};"
          f"  synchronous ({iters} sweeps) {sync.ledger.multiplications:8d} mults;"
          f"  bound eps*||x|| = {eps * np.linalg.norm(x):.1e}")

# a dense sweep over the full graph costs nnz + n multiplications
print(f"one full sweep: {system.G.nnz + system.n} multiplications")
