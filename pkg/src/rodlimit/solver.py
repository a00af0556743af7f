"""Linear and nonlinear solver kernels."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lapack

from .types import BandedMatrix

log = logging.getLogger(__name__)


class SingularMatrix(np.linalg.LinAlgError):
    def __init__(self, pivot: int):
        super().__init__(f"matrix is singular (zero pivot at index {pivot})")
        self.pivot = pivot


class NonConvergence(RuntimeError):
    """Newton iteration did not reach the tolerance."""

    def __init__(self, iterations: int, residual: float, time_index: int | None = None):
        where = "" if time_index is None else f" at time step {time_index}"
        super().__init__(f"Newton failed{where}: {iterations} iterations, residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual
        self.time_index = time_index


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 25
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 2.0 ** -30
    # check analytic Jacobians against finite differences at every iterate
    debug: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class StepStats:
    newton_iterations: int = 0
    final_residual_norm: float = 0.0
    line_search_backtracks: int = 0
    min_step_hit: bool = False


def banded_lu_solve(matrix: BandedMatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve A x = b with LU and partial pivoting confined to the band."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != matrix.dim:
        raise ValueError(f"rhs has length {rhs.shape[0]}, matrix dimension is {matrix.dim}")
    kl, ku = matrix.lower, matrix.upper
    # gbsv wants kl extra rows on top for the fill-in of the pivoting
    ab = np.zeros((2 * kl + ku + 1, matrix.dim), order="F")
    ab[kl:] = matrix.data
    _, _, x, info = lapack.dgbsv(kl, ku, ab, rhs.copy())
    if info > 0:
        raise SingularMatrix(info - 1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} to dgbsv")
    return x


def dense_solve(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Dense LU fallback (debug/oracle path)."""
    lu, piv, x, info = lapack.dgesv(np.array(a, dtype=float), np.array(rhs, dtype=float))
    if info > 0:
        raise SingularMatrix(info - 1)
    return x


def newton_armijo(residual_fn: Callable[[np.ndarray], np.ndarray],
                  jacobian_fn: Callable[[np.ndarray], BandedMatrix | np.ndarray],
                  x0: np.ndarray,
                  config: SolverConfig = SolverConfig(),
                  linear_solve: Callable | None = None):
    """Damped Newton iteration with Armijo backtracking on ||F||^2.

    Converged when ``max|F| <= tol * (1 + max|F(x0)|)``. Returns ``(x, stats)``.
    """
    if linear_solve is None:
        def linear_solve(jac, b):
            if isinstance(jac, BandedMatrix):
                return banded_lu_solve(jac, b)
            return dense_solve(jac, b)

    x = np.array(x0, dtype=float)
    f = residual_fn(x)
    norm0 = float(np.max(np.abs(f))) if f.size else 0.0
    threshold = config.tol * (1.0 + norm0)
    norm = norm0
    merit = float(f @ f)
    backtracks = 0
    min_step_hit = False
    it = 0
    while norm > threshold:
        if it >= config.max_iter:
            raise NonConvergence(it, norm)
        jac = jacobian_fn(x)
        if config.debug:
            _check_jacobian(residual_fn, jac, x)
        delta = linear_solve(jac, -f)
        t = 1.0
        while True:
            x_try = x + t * delta
            f_try = residual_fn(x_try)
            merit_try = float(f_try @ f_try)
            # directional derivative of ||F||^2 along a Newton step is -2||F||^2
            if np.isfinite(merit_try) and merit_try <= (1.0 - 2.0 * config.armijo_c * t) * merit:
                break
            t *= config.backtrack
            backtracks += 1
            if t < config.min_step:
                log.warning("line search exhausted at iteration %d; taking full step", it)
                min_step_hit = True
                x_try = x + delta
                f_try = residual_fn(x_try)
                merit_try = float(f_try @ f_try)
                break
        x, f, merit = x_try, f_try, merit_try
        if not np.isfinite(merit):
            raise NonConvergence(it + 1, float("inf"))
        norm = float(np.max(np.abs(f)))
        it += 1
    return x, StepStats(it, norm, backtracks, min_step_hit)


def fd_jacobian(residual_fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                scale: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian with per-component step scale*(1+|x_k|)."""
    x = np.array(x, dtype=float)
    f0 = np.asarray(residual_fn(x))
    out = np.empty((f0.size, x.size))
    for k in range(x.size):
        h = scale * (1.0 + abs(x[k]))
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        out[:, k] = (np.asarray(residual_fn(xp)) - np.asarray(residual_fn(xm))) / (2.0 * h)
    return out


def _check_jacobian(residual_fn, jac, x, rtol=1e-5):
    dense = jac.to_dense() if isinstance(jac, BandedMatrix) else np.asarray(jac)
    fd = fd_jacobian(residual_fn, x)
    err = np.max(np.abs(dense - fd)) / max(1.0, np.max(np.abs(fd)))
    if err > rtol:
        raise AssertionError(f"analytic Jacobian deviates from finite differences by {err:.2e}")
