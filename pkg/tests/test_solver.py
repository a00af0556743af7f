import math

import numpy as np
import pytest

from rodlimit.solver import (NonConvergence, SingularMatrix, SolverConfig, banded_lu_solve,
                             dense_solve, fd_jacobian, newton_armijo)
from rodlimit.types import BandedMatrix


def _random_banded(rng, n, lo, up):
    a = rng.normal(size=(n, n))
    i, j = np.indices(a.shape)
    a[(i - j > lo) | (j - i > up)] = 0.0
    return a


def test_identity_band():
    b = np.arange(7.0)
    np.testing.assert_array_equal(banded_lu_solve(BandedMatrix.from_dense(np.eye(7), 2, 1), b), b)


def test_banded_matches_dense_lu_dim200():
    rng = np.random.default_rng(0)
    a = _random_banded(rng, 200, 8, 8)
    b = rng.normal(size=200)
    x = banded_lu_solve(BandedMatrix.from_dense(a, 8, 8), b)
    ref = dense_solve(a, b)
    assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)
    assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b) * np.linalg.cond(a)


def test_banded_matches_dense_on_500_systems():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 301))
        lo, up = (int(x) for x in rng.integers(0, min(n, 18), size=2))
        a = _random_banded(rng, n, lo, up) + 4.0 * np.eye(n)
        b = rng.normal(size=n)
        x = banded_lu_solve(BandedMatrix.from_dense(a, lo, up), b)
        ref = dense_solve(a, b)
        worst = max(worst, np.linalg.norm(x - ref) / np.linalg.norm(ref))
    assert worst <= 1e-9


def test_pivoting_needed():
    # zero leading entry forces a row swap inside the band
    a = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(banded_lu_solve(BandedMatrix.from_dense(a, 1, 1), b), np.linalg.solve(a, b))


def test_singular_raises():
    a = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(SingularMatrix) as err:
        banded_lu_solve(BandedMatrix.from_dense(a, 1, 1), np.ones(3))
    assert err.value.pivot == 1
    with pytest.raises(SingularMatrix):
        dense_solve(a, np.ones(3))
    with pytest.raises(ValueError):
        banded_lu_solve(BandedMatrix.from_dense(np.eye(3), 0, 0), np.ones(4))


def test_newton_linear_one_iteration():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(6, 6)) + 5 * np.eye(6)
    b = rng.normal(size=6)
    x, stats = newton_armijo(lambda x: a @ x - b, lambda x: a, np.zeros(6))
    assert stats.newton_iterations == 1
    np.testing.assert_allclose(x, np.linalg.solve(a, b))


def test_newton_sqrt2():
    x, stats = newton_armijo(lambda x: x * x - 2.0, lambda x: np.diag(2.0 * x), np.array([1.0]),
                             SolverConfig(tol=1e-14))
    assert abs(x[0] - math.sqrt(2)) < 1e-12
    assert stats.newton_iterations <= 7


def test_newton_no_root():
    with pytest.raises(NonConvergence) as err:
        newton_armijo(lambda x: x * x + 1.0, lambda x: np.diag(2.0 * x), np.array([0.5]))
    assert err.value.iterations <= SolverConfig().max_iter


def test_merit_decreases_monotonically():
    merits = []

    def f(x):
        return np.arctan(x) - 0.3

    def jac(x):
        merits.append(float(f(x) @ f(x)))
        return np.diag(1.0 / (1.0 + x * x))

    # undamped Newton diverges for arctan from this start
    x, stats = newton_armijo(f, jac, np.array([5.0]))
    assert all(b < a for a, b in zip(merits, merits[1:]))
    assert stats.line_search_backtracks > 0
    assert abs(x[0] - math.tan(0.3)) < 1e-9


def test_min_step_takes_full_step_with_flag():
    # flat residual on the left: no trial step decreases the merit, the full
    # step is taken anyway and the next iteration solves the linear part
    def f(x):
        return np.where(x < 1.9, 1.0, 2.0 * (x - 2.5))

    def jac(x):
        return np.diag(np.where(x < 1.9, -1.0 / 3.0, 2.0))

    x, stats = newton_armijo(f, jac, np.array([0.0]), SolverConfig(min_step=1e-3))
    assert stats.min_step_hit and stats.newton_iterations == 2
    assert x[0] == 2.5


def test_solver_config_invariants():
    for bad in (dict(tol=0), dict(armijo_c=1.0), dict(backtrack=0.0), dict(max_iter=0)):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


def test_fd_jacobian_linear_and_quadratic():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 5))
    x = rng.normal(size=5)
    np.testing.assert_allclose(fd_jacobian(lambda y: a @ y, x), a, atol=1e-9)
    np.testing.assert_allclose(fd_jacobian(lambda y: y * y, x), np.diag(2 * x), atol=1e-9)
