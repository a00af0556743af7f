"""Box-scheme collocation in (s, t) with the lambda-weighted time level.

The residual of one time step is ordered as::

    [left boundary rows | cell 0 | cell 1 | ... | cell N-1 | right boundary rows]

and the unknowns node-major (all m components of node 0, then node 1, ...).
With this ordering the Jacobian has lower bandwidth ``n_left + m - 1`` and
upper bandwidth ``2m - 1 - n_left``.

A model passed to these functions needs ``m``, ``params``, ``kind``,
``matrices`` (a0, a1, b0, b1), ``boundary`` (a BoundarySpec),
``source_parts(phi)``, ``source_jacobian_parts(phi)``, ``initial_state(grid)``,
``normalize(values)`` and ``with_kind(kind)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .solver import NonConvergence, SolverConfig, StepStats, banded_lu_solve, newton_armijo
from .types import BandedMatrix, GridSpec, StateField, SystemKind


@dataclass(frozen=True)
class StencilEval:
    mid: np.ndarray
    dt: np.ndarray
    ds: np.ndarray


def stencil_eval(phi_i_new, phi_i1_new, phi_i_old, phi_i1_old, grid: GridSpec) -> StencilEval:
    """Four-point stencil at (s_{i+1/2}, t^{j+lambda}); vectorizes over leading axes."""
    lam = grid.lam
    phi_i_new, phi_i1_new = np.asarray(phi_i_new, float), np.asarray(phi_i1_new, float)
    phi_i_old, phi_i1_old = np.asarray(phi_i_old, float), np.asarray(phi_i1_old, float)
    mid = 0.5 * lam * (phi_i1_new + phi_i_new) + 0.5 * (1.0 - lam) * (phi_i1_old + phi_i_old)
    dt = (phi_i1_new + phi_i_new - phi_i1_old - phi_i_old) / (2.0 * grid.dt)
    ds = (lam * (phi_i1_new - phi_i_new) + (1.0 - lam) * (phi_i1_old - phi_i_old)) / grid.ds
    return StencilEval(mid, dt, ds)


def _values(state, m: int) -> np.ndarray:
    if isinstance(state, StateField):
        return state.values
    return np.asarray(state, dtype=float).reshape(-1, m)


def _cell_stencils(old: np.ndarray, new: np.ndarray, grid: GridSpec) -> StencilEval:
    if old.shape != new.shape or old.shape[0] != grid.n_nodes:
        raise ValueError(f"fields of shape {old.shape}/{new.shape} do not match a grid with "
                         f"{grid.n_nodes} nodes")
    return stencil_eval(new[:-1], new[1:], old[:-1], old[1:], grid)


def _interior_residual(model, st: StencilEval) -> np.ndarray:
    mats = model.matrices
    c0, c1 = model.source_parts(st.mid)
    res = st.dt @ mats.a0.T + st.ds @ mats.b0.T + c0
    if model.kind is SystemKind.EPS:
        res = res + model.params.epsilon ** 2 * (st.dt @ mats.a1.T + st.ds @ mats.b1.T + c1)
    return res


def _closure_residual(model, old0: np.ndarray, new0: np.ndarray, grid: GridSpec) -> np.ndarray:
    rows = list(model.boundary.left_closures)
    if not rows:
        return np.zeros(0)
    mats = model.matrices
    lam = grid.lam
    dt = (new0 - old0) / grid.dt
    at = lam * new0 + (1.0 - lam) * old0
    c0, c1 = model.source_parts(at)
    res = mats.a0[rows] @ dt + c0[rows]
    if model.kind is SystemKind.EPS:
        res = res + model.params.epsilon ** 2 * (mats.a1[rows] @ dt + c1[rows])
    return res


def boundary_residual(model, old: np.ndarray, new: np.ndarray, grid: GridSpec,
                      homogeneous: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """(left rows, right rows) of the boundary block."""
    spec = model.boundary
    left_d = np.array([new[0, k] - (0.0 if homogeneous else val) for k, val in spec.left_dirichlet])
    left = np.concatenate([left_d, _closure_residual(model, old[0], new[0], grid)])
    right = np.array([new[-1, k] - (0.0 if homogeneous else val) for k, val in spec.right_dirichlet])
    return left, right


def assemble_residual(model, phi_old, phi_new, grid: GridSpec) -> np.ndarray:
    """Global residual F(phi_new) of one time step, length m(N+1)."""
    old, new = _values(phi_old, model.m), _values(phi_new, model.m)
    st = _cell_stencils(old, new, grid)
    left, right = boundary_residual(model, old, new, grid)
    return np.concatenate([left, _interior_residual(model, st).reshape(-1), right])


@functools.lru_cache(maxsize=64)
def _band_layout(n_cells: int, m: int, n_left: int):
    lower = n_left + m - 1
    upper = 2 * m - 1 - n_left
    i = np.arange(n_cells)[:, None, None]
    rows = n_left + m * i + np.arange(m)[None, :, None]
    cols = m * i + np.arange(2 * m)[None, None, :]
    band_rows = upper + rows - cols
    cols = np.broadcast_to(cols, band_rows.shape)
    return lower, upper, band_rows, cols


def _system_blocks(model, st: StencilEval, grid: GridSpec, include_eps: bool):
    """(left-node block, right-node block) per cell, each (N, m, m)."""
    mats = model.matrices
    j0, j1 = model.source_jacobian_parts(st.mid)
    a, b, cjac = mats.a0, mats.b0, j0
    if include_eps:
        e2 = model.params.epsilon ** 2
        a = a + e2 * mats.a1
        b = b + e2 * mats.b1
        cjac = j0 + e2 * j1
    ta = a / (2.0 * grid.dt)
    tb = (grid.lam / grid.ds) * b
    half = 0.5 * grid.lam * cjac
    return ta - tb + half, ta + tb + half


def _assemble(model, old: np.ndarray, new: np.ndarray, grid: GridSpec, include_eps: bool) -> BandedMatrix:
    m, n = model.m, grid.n_cells
    spec = model.boundary
    lower, upper, band_rows, cols = _band_layout(n, m, spec.n_left)
    st = _cell_stencils(old, new, grid)
    left_block, right_block = _system_blocks(model, st, grid, include_eps)
    mat = BandedMatrix.zeros(m * (n + 1), lower, upper)
    mat.data[band_rows, cols] = np.concatenate([left_block, right_block], axis=2)

    row = 0
    for k, _ in spec.left_dirichlet:
        mat.data[upper + row - k, k] = 1.0
        row += 1
    if spec.left_closures:
        rows = list(spec.left_closures)
        mats = model.matrices
        at = grid.lam * new[0] + (1.0 - grid.lam) * old[0]
        j0, j1 = model.source_jacobian_parts(at)
        a, cj = mats.a0[rows], j0[rows]
        if include_eps:
            e2 = model.params.epsilon ** 2
            a = a + e2 * mats.a1[rows]
            cj = cj + e2 * j1[rows]
        block = a / grid.dt + grid.lam * cj
        for r in range(len(rows)):
            cidx = np.arange(m)
            mat.data[upper + row - cidx, cidx] = block[r]
            row += 1
    base_row = spec.n_left + m * n
    for r, (k, _) in enumerate(spec.right_dirichlet):
        col = m * n + k
        mat.data[upper + base_row + r - col, col] = 1.0
    return mat


def assemble_jacobian(model, phi_old, phi_new, grid: GridSpec) -> BandedMatrix:
    """Analytic Jacobian of :func:`assemble_residual` w.r.t. phi_new, band storage."""
    old, new = _values(phi_old, model.m), _values(phi_new, model.m)
    return _assemble(model, old, new, grid, include_eps=model.kind is SystemKind.EPS)


def correction_matrix(model, limit_old, limit_new, grid: GridSpec) -> BandedMatrix:
    """System matrix of the linear first-order correction at the limit fields."""
    old, new = _values(limit_old, model.m), _values(limit_new, model.m)
    return _assemble(model, old, new, grid, include_eps=False)


def correction_residual(model, limit_old, limit_new, corr_old, corr_new, grid: GridSpec) -> np.ndarray:
    """Residual of the discretized correction system; affine in ``corr_new``."""
    m = model.m
    old0, new0 = _values(limit_old, m), _values(limit_new, m)
    old1, new1 = _values(corr_old, m), _values(corr_new, m)
    mats = model.matrices
    st0 = _cell_stencils(old0, new0, grid)
    st1 = _cell_stencils(old1, new1, grid)
    _, c1 = model.source_parts(st0.mid)
    j0, _ = model.source_jacobian_parts(st0.mid)
    forcing = -(st0.dt @ mats.a1.T + st0.ds @ mats.b1.T + c1)
    linear = np.einsum("nij,nj->ni", j0, st1.mid)
    interior = st1.dt @ mats.a0.T + st1.ds @ mats.b0.T + linear - forcing

    spec = model.boundary
    left_d = np.array([new1[0, k] for k, _ in spec.left_dirichlet])
    closures = np.zeros(0)
    if spec.left_closures:
        rows = list(spec.left_closures)
        lam = grid.lam
        at0 = lam * new0[0] + (1.0 - lam) * old0[0]
        at1 = lam * new1[0] + (1.0 - lam) * old1[0]
        _, c1n = model.source_parts(at0)
        j0n, _ = model.source_jacobian_parts(at0)
        dt0 = (new0[0] - old0[0]) / grid.dt
        dt1 = (new1[0] - old1[0]) / grid.dt
        f_node = -(mats.a1[rows] @ dt0 + c1n[rows])
        closures = mats.a0[rows] @ dt1 + j0n[rows] @ at1 - f_node
    right = np.array([new1[-1, k] for k, _ in spec.right_dirichlet])
    return np.concatenate([left_d, closures, interior.reshape(-1), right])


def step(model, phi_old, grid: GridSpec, config: SolverConfig = SolverConfig(), predictor=None):
    """Advance one time level by Newton-Armijo.

    The iteration starts from ``predictor`` if given, else from ``phi_old``.
    """
    old = _values(phi_old, model.m)
    x0 = (old if predictor is None else _values(predictor, model.m)).reshape(-1).copy()

    def residual(x):
        return assemble_residual(model, old, x.reshape(old.shape), grid)

    def jacobian(x):
        return assemble_jacobian(model, old, x.reshape(old.shape), grid)

    x, stats = newton_armijo(residual, jacobian, x0, config)
    return StateField(model.normalize(x.reshape(old.shape))), stats


def correction_step(limit_old, limit_new, corr_old, grid: GridSpec, model) -> StateField:
    """One linear solve for the correction at the new level."""
    m = model.m
    c_old = _values(corr_old, m)
    res = correction_residual(model, limit_old, limit_new, c_old, c_old, grid)
    mat = correction_matrix(model, limit_old, limit_new, grid)
    delta = banded_lu_solve(mat, -res)
    return StateField(c_old + delta.reshape(c_old.shape))


@dataclass
class Trajectory:
    """Time levels of a run; when ``keep`` was False only the last level is stored."""

    times: list[float] = field(default_factory=list)
    states: list[StateField] = field(default_factory=list)
    corrections: list[StateField] | None = None
    stats: list[StepStats] = field(default_factory=list)

    @property
    def final(self) -> StateField:
        return self.states[-1]

    @property
    def final_correction(self) -> StateField:
        if not self.corrections:
            raise ValueError("trajectory has no correction field")
        return self.corrections[-1]

    def mean_newton_iterations(self) -> float:
        if not self.stats:
            return 0.0
        return float(np.mean([s.newton_iterations for s in self.stats]))


Callback = Callable[[int, float, StateField, "StepStats | None", "StateField | None"], None]


def simulate(model, grid: GridSpec, t_end: float, callbacks: Iterable[Callback] = (),
             config: SolverConfig = SolverConfig(), initial: StateField | None = None,
             keep: bool = True) -> Trajectory:
    """Integrate from the model's initial state (or ``initial``) up to ``t_end``.

    A CORRECTION-kind model runs the limit system and advances the correction
    in lockstep after every accepted limit step.
    """
    n_steps = grid.n_steps(t_end)
    callbacks = list(callbacks)
    with_corr = model.kind is SystemKind.CORRECTION
    stepper = model.with_kind(SystemKind.LIMIT) if with_corr else model
    state = initial if initial is not None else model.initial_state(grid)
    corr = StateField(np.zeros_like(state.values)) if with_corr else None

    traj = Trajectory(corrections=[] if with_corr else None)

    def record(j, t, st, stats, cr):
        if keep or j == n_steps:
            traj.times.append(t)
            traj.states.append(st)
            if with_corr:
                traj.corrections.append(cr)
        if stats is not None:
            traj.stats.append(stats)
        for cb in callbacks:
            cb(j, t, st, stats, cr)

    record(0, 0.0, state, None, corr)
    previous = None
    for j in range(1, n_steps + 1):
        # linear extrapolation from the last two levels
        predictor = None if previous is None else 2.0 * state.values - previous.values
        try:
            new, stats = step(stepper, state, grid, config, predictor)
        except NonConvergence as exc:
            raise NonConvergence(exc.iterations, exc.residual, time_index=j) from exc
        if with_corr:
            corr = correction_step(state, new, corr, grid, model)
        previous, state = state, new
        record(j, j * grid.dt, state, stats, corr)
    return traj
