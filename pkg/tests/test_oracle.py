import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localsolve.oracle import (
    OracleError,
    WalkBudgetExceeded,
    abs_system_solution,
    dense_solve,
    dense_spectral,
    expected_update,
    matrix_power_residual,
    neighborhood_balls,
    neumann_partial_sum,
    walk_sum_bruteforce,
)
from localsolve.sparse_core import SparseMatrix, SparseVector
from localsolve.systems import FixedPointSystem, LinearSystem
from sysgen import diag_dominant, random_system

TWO_CYCLE = FixedPointSystem(SparseMatrix.from_dense([[0.0, 0.5], [0.5, 0.0]]), [1.0, 1.0])


def test_dense_solve_zero_matrix():
    z = np.array([1.0, -2.0, 3.5])
    sol = dense_solve(FixedPointSystem(SparseMatrix.zeros(3), z))
    assert np.array_equal(sol.x, z) and sol.residual_norm == 0.0


def test_dense_solve_two_cycle():
    sol = dense_solve(TWO_CYCLE)
    assert np.allclose(sol.x, [2.0, 2.0], atol=1e-15)
    assert sol.norm == pytest.approx(np.sqrt(8))


def test_dense_solve_diag_dominant_linear():
    ls = diag_dominant(np.random.default_rng(0), 50)
    sol = dense_solve(ls)
    assert sol.residual_norm <= 1e-10 * np.linalg.norm(ls.b)
    assert sol.method == "lu(A)"


def test_dense_solve_singular():
    G = SparseMatrix.from_dense([[1.0, 0.0], [0.0, 0.5]])
    with pytest.raises(OracleError, match="singular"):
        dense_solve(FixedPointSystem(G, [1.0, 1.0]))


def test_dense_solve_size_guard():
    with pytest.raises(OracleError):
        dense_solve(LinearSystem(SparseMatrix.zeros(5001), np.ones(5001)))


def test_spectral_two_cycle():
    s = dense_spectral(TWO_CYCLE.G)
    assert s.spectral_radius == pytest.approx(0.5, abs=1e-15)
    assert s.operator_norm_2 == pytest.approx(0.5, abs=1e-15)


def test_spectral_star():
    star = np.zeros((5, 5))
    star[0, 1:] = star[1:, 0] = 1.0
    s = dense_spectral(star)
    assert s.spectral_radius == pytest.approx(2.0, abs=1e-12)
    deg = star.sum(axis=1)
    assert max(deg.mean(), np.sqrt(deg.max())) <= s.spectral_radius + 1e-12 <= deg.max() + 1e-12


def test_spectral_condition_number():
    assert dense_spectral(np.diag([1.0, 3.0])).condition_number == pytest.approx(3.0)
    assert dense_spectral(np.array([[1.0, 1.0], [0.0, 1.0]])).condition_number is None
    assert dense_spectral(np.diag([-1.0, 3.0])).condition_number is None


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32 - 1), st.booleans())
def test_spectral_norm_dominates_radius(n, seed, sym):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    if sym:
        M = M + M.T
    s = dense_spectral(M)
    assert s.operator_norm_2 >= s.spectral_radius * (1 - 1e-8)
    if sym:
        assert s.operator_norm_2 == pytest.approx(s.spectral_radius, rel=1e-8)


def test_neumann_examples():
    assert neumann_partial_sum(TWO_CYCLE, 0, 0) == 1.0
    assert neumann_partial_sum(TWO_CYCLE, 0, 3) == 1.875
    with pytest.raises(ValueError):
        neumann_partial_sum(TWO_CYCLE, 0, -1)


def test_neumann_converges_to_solution():
    system = random_system(np.random.default_rng(5), 30, abs_norm=0.7)
    x = dense_solve(system).x
    assert neumann_partial_sum(system, 4, 200) == pytest.approx(x[4], abs=1e-10)


def test_walk_sum_examples():
    assert walk_sum_bruteforce(TWO_CYCLE, 0, 0) == 1.0
    assert walk_sum_bruteforce(TWO_CYCLE, 0, 2) == 1.75


def test_walk_sum_budget():
    full = FixedPointSystem(SparseMatrix.from_dense(np.full((6, 6), 0.1)), np.ones(6))
    with pytest.raises(WalkBudgetExceeded):
        walk_sum_bruteforce(full, 0, 8, budget=1000)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_walk_sum_matches_neumann(n, seed, l):
    system = random_system(np.random.default_rng(seed), n, density=0.6)
    assert walk_sum_bruteforce(system, 0, l) == pytest.approx(neumann_partial_sum(system, 0, l), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_walk_sum_error_bounds(n, seed, l):
    rng = np.random.default_rng(seed)
    system = random_system(rng, n, abs_norm=float(rng.uniform(0.1, 0.9)), density=0.6,
                           z_kind=str(rng.choice(["nonneg", "dense"])))
    x = dense_solve(system).x
    Gt = np.abs(system.G.to_dense()).T
    err = abs(x[0] - walk_sum_bruteforce(system, 0, l))
    tail_vec = np.linalg.matrix_power(Gt, l + 1)[:, 0]
    x_abs = abs_system_solution(system)
    assert err <= float(x_abs @ tail_vec) * (1 + 1e-9) + 1e-14
    if np.all(system.z >= 0) and np.all(system.G.data >= 0):
        assert np.allclose(x_abs, x)
    g_abs = np.linalg.norm(Gt, 2)
    assert err <= g_abs ** (l + 1) * np.linalg.norm(x_abs) * (1 + 1e-9) + 1e-14


def test_matrix_power_and_balls():
    G = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    assert matrix_power_residual(G, 0, 2).tolist() == [0.0, 0.0, 1.0]
    assert neighborhood_balls(G, 0, 3) == [{0}, {0, 1}, {0, 1, 2}, {0, 1, 2}]


def test_expected_update_examples():
    G = np.array([[0.0, 0.5, 0.2], [0.3, 0.1, 0.0], [0.0, 0.0, 0.4]])
    e1 = SparseVector.basis(3, 1)
    assert np.allclose(expected_update(e1, G, 1), G.T @ e1.to_dense(), atol=0)
    r = SparseVector.from_dict(3, {0: 0.5, 2: -1.0})
    assert np.allclose(expected_update(r, np.zeros((3, 3)), 4), r.to_dense() * 0.75, atol=1e-16)
    with pytest.raises(ValueError):
        expected_update(r, G, 1)
