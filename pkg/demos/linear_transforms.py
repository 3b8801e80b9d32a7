"""Turning Ax = b into a fixed point x = Gx + z, Jacobi versus Richardson.

Run: python3 demos/linear_transforms.py
"""

import numpy as np

from localsolve import LinearSystem, SparseMatrix, TerminationRule, jacobi_transform, make_policy, run
from localsolve import richardson_optimal_gamma, richardson_transform
from localsolve.oracle import dense_spectral

rng = np.random.default_rng(0)
n = 200
# sparse, symmetric, diagonally dominant
B = rng.normal(size=(n, n)) * (rng.random((n, n)) < 0.02)
B = (B + B.T) / 2
A = B + np.diag(np.abs(B).sum(axis=1) + 0.5)
b = rng.normal(size=n)
lin = LinearSystem(SparseMatrix.from_dense(A), b)
x = np.linalg.solve(A, b)

gamma = richardson_optimal_gamma(lin.A)
kappa = dense_spectral(A).condition_number
print(f"kappa(A) = {kappa:.2f}, (kappa-1)/(kappa+1) = {(kappa - 1) / (kappa + 1):.4f}")
for name, fp in [("jacobi", jacobi_transform(lin)), (f"richardson gamma={gamma:.4f}", richardson_transform(lin, gamma))]:
    res = run(fp, 5, make_policy("greedy_max", fp.G, 5), TerminationRule(1e-8))
    print(f"{name:28s} ||G||_2 = {dense_spectral(fp.G).operator_norm_2:.4f}  tasks {res.tasks:6d}  "
          f"error {abs(res.estimate - x[5]):.1e}")
