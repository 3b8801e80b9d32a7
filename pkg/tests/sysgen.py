"""Random test systems shared by the unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from localsolve import FixedPointSystem, LinearSystem, SparseMatrix


def sparse_pattern(rng, n: int, density: float, symmetric: bool = False, diag: bool = True) -> np.ndarray:
    mask = rng.random((n, n)) < density
    if symmetric:
        mask = np.triu(mask)
        mask = mask | mask.T
    if not diag:
        np.fill_diagonal(mask, False)
    return mask


def random_system(
    rng,
    n: int,
    abs_norm: float = 0.9,
    density: float | None = None,
    signs: str = "mixed",  # mixed | nonneg
    z_kind: str = "dense",  # dense | nonneg | ones
    symmetric: bool = False,
) -> FixedPointSystem:
    """``G`` with ``|| |G| ||_2 == abs_norm`` (dense check), plus a right-hand side."""
    density = density if density is not None else min(1.0, 4.0 / max(n, 1))
    mask = sparse_pattern(rng, n, density, symmetric=symmetric)
    vals = rng.uniform(0.1, 1.0, (n, n))
    if signs == "mixed":
        vals *= rng.choice([-1.0, 1.0], (n, n))
    if symmetric:
        vals = np.triu(vals) + np.triu(vals, 1).T
    G = np.where(mask, vals, 0.0)
    s = np.linalg.norm(np.abs(G), 2)
    if s > 0:
        G *= abs_norm / s
    if z_kind == "dense":
        z = rng.normal(size=n)
    elif z_kind == "nonneg":
        z = rng.uniform(0.0, 1.0, n)
    else:
        z = np.ones(n)
    return FixedPointSystem(SparseMatrix.from_dense(G), z)


def random_spd(rng, n: int, kappa_max: float = 100.0) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    lam = np.exp(rng.uniform(0.0, np.log(kappa_max), n))
    A = (Q * lam) @ Q.T
    return (A + A.T) / 2


def diag_dominant(rng, n: int, density: float = 0.3) -> LinearSystem:
    mask = sparse_pattern(rng, n, density, diag=False)
    A = np.where(mask, rng.normal(size=(n, n)), 0.0)
    A[np.diag_indices(n)] = np.abs(A).sum(axis=1) + rng.uniform(0.5, 2.0, n)
    A[np.diag_indices(n)] *= rng.choice([-1.0, 1.0], n)
    return LinearSystem(SparseMatrix.from_dense(A), rng.normal(size=n))


def matching_union_graph(rng, n: int, d: int) -> np.ndarray:
    """Symmetric 0/1 pattern from ``d`` random perfect matchings (row nnz <= d)."""
    M = np.zeros((n, n), dtype=bool)
    for _ in range(d):
        perm = rng.permutation(n)
        a, b = perm[: n // 2], perm[n // 2 : 2 * (n // 2)]
        M[a, b] = True
        M[b, a] = True
    return M


def scaled_symmetric(rng, n: int, d: int, norm: float) -> FixedPointSystem:
    """Symmetric mixed-sign ``G`` with row nnz <= d and ``||G||_2 == norm``."""
    mask = matching_union_graph(rng, n, d)
    W = rng.uniform(0.2, 1.0, (n, n)) * rng.choice([-1.0, 1.0], (n, n))
    W = np.triu(W) + np.triu(W, 1).T
    G = np.where(mask, W, 0.0)
    G *= norm / np.linalg.norm(G, 2)
    return FixedPointSystem(SparseMatrix.from_dense(G), rng.normal(size=n))
