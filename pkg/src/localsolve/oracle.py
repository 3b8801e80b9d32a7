"""Dense ground truth for tests and error reporting.

Nothing here touches the sparse kernels: matrices are densified once and
every computation runs on plain ``numpy`` arrays, so agreement between an
oracle and the solver is evidence rather than tautology.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .sparse_core import SparseMatrix, SparseVector
from .systems import FixedPointSystem, LinearSystem

MAX_SOLVE_N = 5000
MAX_SPECTRAL_N = 500
MAX_NEUMANN_N = 500


class OracleError(RuntimeError):
    pass


class WalkBudgetExceeded(OracleError):
    pass


@dataclass(frozen=True)
class DenseSolution:
    x: np.ndarray
    residual_norm: float
    method: str

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.x))


@dataclass(frozen=True)
class Spectral:
    spectral_radius: float
    operator_norm_2: float
    condition_number: float | None


def _dense(M) -> np.ndarray:
    return M.to_dense() if isinstance(M, SparseMatrix) else np.asarray(M, dtype=np.float64)


def dense_solve(system: FixedPointSystem | LinearSystem, pivot_tol: float = 1e-14) -> DenseSolution:
    """LU with partial pivoting on ``I - G`` (or ``A``); residual verified."""
    if isinstance(system, FixedPointSystem):
        n = system.n
        M = np.eye(n) - system.G.to_dense()
        rhs = np.asarray(system.z, dtype=np.float64)
        method = "lu(I-G)"
    else:
        n = system.n
        M = system.A.to_dense()
        rhs = np.asarray(system.b, dtype=np.float64)
        method = "lu(A)"
    if n > MAX_SOLVE_N:
        raise OracleError(f"n={n} exceeds dense limit {MAX_SOLVE_N}")
    with warnings.catch_warnings():
        # singularity is reported by the pivot check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    scale = max(np.max(np.abs(M)), 1.0)
    if np.min(np.abs(np.diag(lu))) < pivot_tol * scale:
        raise OracleError("matrix is numerically singular")
    x = scipy.linalg.lu_solve((lu, piv), rhs)
    res = float(np.linalg.norm(M @ x - rhs))
    if res > 1e-10 * max(np.linalg.norm(rhs), np.finfo(float).tiny):
        raise OracleError(f"dense solve residual {res:.3g} too large")
    return DenseSolution(x, res, method)


def dense_spectral(M) -> Spectral:
    D = _dense(M)
    if D.shape[0] > MAX_SPECTRAL_N:
        raise OracleError(f"n={D.shape[0]} exceeds spectral limit {MAX_SPECTRAL_N}")
    try:
        rho = float(np.max(np.abs(np.linalg.eigvals(D)), initial=0.0))
        gram = np.linalg.eigvalsh(D.T @ D)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"eigensolver did not converge: {exc}") from exc
    norm2 = float(np.sqrt(max(gram[-1], 0.0)))
    kappa = None
    if np.array_equal(D, D.T):
        lam = np.linalg.eigvalsh(D)
        if lam[0] > 0:
            kappa = float(lam[-1] / lam[0])
    return Spectral(rho, norm2, kappa)


def matrix_power_residual(G, i: int, t: int) -> np.ndarray:
    """``(G^T)^t e_i`` by repeated dense products."""
    D = _dense(G)
    v = np.zeros(D.shape[0])
    v[i] = 1.0
    for _ in range(t):
        v = D.T @ v
    return v


def neighborhood_balls(G, i: int, t: int) -> list[set[int]]:
    """``N_i(k)`` for ``k = 0..t`` from a dense reachability sweep."""
    D = _dense(G) != 0
    ball = {i}
    out = [set(ball)]
    for _ in range(t):
        ball = ball | {int(v) for u in ball for v in np.flatnonzero(D[u])}
        out.append(set(ball))
    return out


def neumann_partial_sum(system: FixedPointSystem, i: int, K: int) -> float:
    """``z^T sum_{k=0}^{K} (G^T)^k e_i``."""
    if K < 0:
        raise ValueError("K must be >= 0")
    if system.n > MAX_NEUMANN_N:
        raise OracleError(f"n={system.n} exceeds limit {MAX_NEUMANN_N}")
    Gt = system.G.to_dense().T
    z = np.asarray(system.z)
    v = np.zeros(system.n)
    v[i] = 1.0
    total = float(z @ v)
    for _ in range(K):
        v = Gt @ v
        total += float(z @ v)
    return total


def walk_sum_bruteforce(system: FixedPointSystem, i: int, l: int, budget: int = 10**7) -> float:
    """Sum of ``prod(G along walk) * z[end]`` over every walk from ``i`` of length <= ``l``.

    Depth-first with an explicit stack; raises :class:`WalkBudgetExceeded`
    once more than ``budget`` walks have been visited.
    """
    D = system.G.to_dense()
    z = np.asarray(system.z)
    nbrs = [np.flatnonzero(D[u]).tolist() for u in range(system.n)]
    stack = [(i, 0, 1.0)]
    total = 0.0
    visited = 0
    while stack:
        u, depth, w = stack.pop()
        visited += 1
        if visited > budget:
            raise WalkBudgetExceeded(f"more than {budget} walks of length <= {l}")
        total += w * z[u]
        if depth < l:
            for v in nbrs[u]:
                stack.append((v, depth + 1, w * D[u, v]))
    return total


def expected_update(r: SparseVector, G, denom: int) -> np.ndarray:
    """``(I - (I - G^T)/denom) r``: mean residual after one padded-uniform draw."""
    if denom < r.l0:
        raise ValueError(f"denom={denom} is smaller than ||r||_0={r.l0}")
    D = _dense(G)
    v = r.to_dense()
    return v - (v - D.T @ v) / denom


def abs_system_solution(system: FixedPointSystem) -> np.ndarray:
    """Solution of ``x = |G| x + |z|``.

    Every walk weight is bounded in magnitude by the same walk in this
    system, so ``x_abs @ (|G|^T)^k e_i`` bounds the total contribution of the
    walks of length ``>= k``. For ``G, z >= 0`` it is the ordinary solution.
    """
    A = np.eye(system.n) - np.abs(system.G.to_dense())
    return np.linalg.solve(A, np.abs(np.asarray(system.z)))
