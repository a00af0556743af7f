"""Experiment drivers: eps-sweeps, refinement studies, energy histories.

Independent member runs may execute in worker processes; ``RODLIMIT_THREADS``
caps their number. Results always come back in input order.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .diagnostics import (ConsistencyReport, asymptotic_consistency, convergence_order, energy_w0,
                          energy_w1, fit_order_above_noise)
from .engine import simulate
from .planar import R1, R2, PlanarModel
from .solver import NonConvergence, SolverConfig
from .types import GridSpec, Parameters, StateField, SystemKind, Variant, l2_norm

THREADS_ENV = "RODLIMIT_THREADS"


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return max(1, min(cap, n_tasks))


def parallel_map(fn, items, workers: int | None = None) -> list:
    items = list(items)
    if workers is None:
        workers = worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def final_state(model, grid: GridSpec, t_end: float, config: SolverConfig = SolverConfig()) -> StateField:
    return simulate(model, grid, t_end, config=config, keep=False).final


def _final_job(args):
    model, grid, t_end, config = args
    return final_state(model, grid, t_end, config)


def _pair_job(args):
    model, grid, t_end, config = args
    traj = simulate(model, grid, t_end, config=config, keep=False)
    return traj.final, traj.final_correction


# -- asymptotic consistency ---------------------------------------------------------

def default_eps_grid(lo_exp: float = -10.0, hi_exp: float = 0.0, count: int = 21) -> list[float]:
    return [float(x) for x in np.logspace(lo_exp, hi_exp, count)]


@dataclass(frozen=True)
class SweepResult:
    reports: tuple[ConsistencyReport, ...]
    limit_norm: float
    # eps values whose run hit NonConvergence
    failed: tuple[float, ...] = ()

    def slope(self, which: str, lo: float, hi: float, filter_noise: bool = True) -> float | None:
        """Fitted slope of ||c1*|| or ||c2*|| against eps over [lo, hi]."""
        attr = {"c1": "norm_c1_star", "c2": "norm_c2_star"}[which]
        pts = [(r.epsilon, getattr(r, attr)) for r in self.reports
               if lo * (1 - 1e-9) <= r.epsilon <= hi * (1 + 1e-9)]
        if len(pts) < 3:
            return None
        eps, vals = zip(*pts)
        if filter_noise:
            return fit_order_above_noise(eps, vals, self.limit_norm)
        if min(vals) <= 0:
            return None
        return convergence_order(eps, vals)


def eps_sweep(epsilons, variant: Variant = Variant.S, grid: GridSpec = GridSpec(100, 1e-2, 1.0),
              t_end: float = 2.0, params: Parameters = Parameters(),
              config: SolverConfig = SolverConfig(), workers: int | None = None) -> SweepResult:
    """One limit+correction run, then one eps run per entry of ``epsilons``."""
    epsilons = [float(e) for e in epsilons]
    base = params.with_epsilon(0.0)
    phi0, phi1 = _pair_job((PlanarModel(base, variant, SystemKind.CORRECTION), grid, t_end, config))
    jobs = [(PlanarModel(params.with_epsilon(e), variant, SystemKind.EPS), grid, t_end, config)
            for e in epsilons]

    reports, failed = [], []
    for e, res in zip(epsilons, parallel_map(_safe_final_job, jobs, workers)):
        if isinstance(res, NonConvergence):
            failed.append(e)
            continue
        reports.append(asymptotic_consistency(res, phi0, phi1, e, grid.ds))
    return SweepResult(tuple(reports), l2_norm(phi0, grid.ds), tuple(failed))


def _safe_final_job(args):
    try:
        return _final_job(args)
    except NonConvergence as exc:
        return exc


# -- refinement studies -------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceResult:
    axis: str
    steps: tuple[float, ...]
    errors: tuple[float, ...]
    order: float | None

    def local_orders(self) -> list[float]:
        h, e = np.log(self.steps), np.log(self.errors)
        return list(np.diff(e) / np.diff(h))


def refinement_steps(base: float = 0.1, levels: int = 7) -> list[float]:
    return [base * 0.5 ** k for k in range(levels)]


def _relative_error(sol: np.ndarray, ref: np.ndarray, ds: float) -> float:
    return l2_norm(sol - ref, ds) / l2_norm(ref, ds)


def convergence_space(model, steps=None, ref_step: float = 1e-3, dt: float = 1e-2,
                      lam: float = 1.0, t_end: float = 2.0, config: SolverConfig = SolverConfig(),
                      workers: int | None = None) -> ConvergenceResult:
    """Relative L2 error at ``t_end`` over cell sizes; the reference is spline-interpolated."""
    steps = refinement_steps() if steps is None else [float(h) for h in steps]
    grids = [GridSpec.from_steps(ref_step, dt, lam)] + [GridSpec.from_steps(h, dt, lam) for h in steps]
    finals = parallel_map(_final_job, [(model, g, t_end, config) for g in grids], workers)
    ref_grid, ref = grids[0], finals[0]
    spline = CubicSpline(ref_grid.nodes, ref.values, axis=0)
    errors = [_relative_error(sol.values, spline(g.nodes), g.ds) for g, sol in zip(grids[1:], finals[1:])]
    order = fit_order_above_noise(steps, errors, 1.0)
    return ConvergenceResult("space", tuple(steps), tuple(errors), order)


def convergence_time(model, steps=None, ref_step: float = 1e-3, ds: float = 2e-3,
                     lam: float = 1.0, t_end: float = 2.0, config: SolverConfig = SolverConfig(),
                     workers: int | None = None) -> ConvergenceResult:
    """Relative L2 error at ``t_end`` over time steps on a fixed spatial grid."""
    steps = refinement_steps() if steps is None else [float(h) for h in steps]
    grids = [GridSpec.from_steps(ds, h, lam) for h in [ref_step] + steps]
    finals = parallel_map(_final_job, [(model, g, t_end, config) for g in grids], workers)
    ref = finals[0].values
    errors = [_relative_error(sol.values, ref, grids[0].ds) for sol in finals[1:]]
    order = fit_order_above_noise(steps, errors, 1.0)
    return ConvergenceResult("time", tuple(steps), tuple(errors), order)


# -- energy ------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyHistory:
    times: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    total: np.ndarray

    @property
    def drift(self) -> float:
        return float(np.max(np.abs(self.total - self.total[0])))


def energy_history(model, grid: GridSpec, t_end: float,
                   config: SolverConfig = SolverConfig()) -> EnergyHistory:
    """Energy per time level.

    LIMIT: ``w1 = 0``. EPS: ``w1`` holds the eps^2 energy terms of the same
    state, so ``total`` is the exact discrete energy of the eps system.
    CORRECTION: ``w1`` is the first-order energy of (limit, correction).
    """
    params = model.params
    e2 = params.epsilon ** 2
    times, w0, w1 = [], [], []

    def record(j, t, state, stats, corr):
        times.append(t)
        w0.append(energy_w0(state, params))
        if model.kind is SystemKind.LIMIT:
            w1.append(0.0)
        elif model.kind is SystemKind.EPS:
            w1.append(energy_w1(state, StateField(np.zeros_like(state.values)), params))
        else:
            w1.append(energy_w1(state, corr, params))

    simulate(model, grid, t_end, callbacks=[record], config=config, keep=False)
    w0a, w1a = np.array(w0), np.array(w1)
    return EnergyHistory(np.array(times), w0a, w1a, w0a + e2 * w1a)


# -- cross-variant agreement / tip curves -------------------------------------------------

@dataclass(frozen=True)
class CrossVariantResult:
    errors: dict            # variant -> L2 distance to its refined reference
    differences: dict       # (variant, variant) -> L2 distance between coarse solutions

    def agree(self) -> bool:
        """Every pairwise gap lies within the larger of the two discretization errors."""
        return all(d <= max(self.errors[a], self.errors[b]) for (a, b), d in self.differences.items())


def _restrict(values: np.ndarray, factor: int) -> np.ndarray:
    return values[::factor]


def cross_variant(params: Parameters = Parameters(), grid: GridSpec = GridSpec(100, 1e-2, 1.0),
                  t_end: float = 2.0, refine: int = 4, kind: SystemKind = SystemKind.LIMIT,
                  variants=tuple(Variant), config: SolverConfig = SolverConfig(),
                  workers: int | None = None) -> CrossVariantResult:
    fine = GridSpec(grid.n_cells * refine, grid.dt / refine, grid.lam)
    jobs = []
    for v in variants:
        model = PlanarModel(params, v, kind)
        jobs += [(model, grid, t_end, config), (model, fine, t_end, config)]
    finals = parallel_map(_final_job, jobs, workers)
    coarse = {v: finals[2 * k].values for k, v in enumerate(variants)}
    errors = {v: l2_norm(coarse[v] - _restrict(finals[2 * k + 1].values, refine), grid.ds)
              for k, v in enumerate(variants)}
    diffs = {(a, b): l2_norm(coarse[a] - coarse[b], grid.ds)
             for a, b in itertools.combinations(variants, 2)}
    return CrossVariantResult(errors, diffs)


def centerline_history(model, grid: GridSpec, t_end: float,
                       config: SolverConfig = SolverConfig()) -> tuple[np.ndarray, np.ndarray]:
    """(times, centerline positions of shape (levels, N+1, 2))."""
    times, curves = [], []

    def record(j, t, state, stats, corr):
        times.append(t)
        curves.append(state.values[:, [R1, R2]].copy())

    simulate(model, grid, t_end, callbacks=[record], config=config, keep=False)
    return np.array(times), np.array(curves)


def _centerline_job(args):
    return centerline_history(*args)


@dataclass(frozen=True)
class TransitionResult:
    tip_gap: dict          # eps -> max over t of |tip(eps) - tip(0)|
    centerline_gap: dict   # eps -> max over t of the L2(0,1) centerline distance


def eps_transition(epsilons=(0.02, 1e-3), params: Parameters = Parameters(),
                   variant: Variant = Variant.S, grid: GridSpec = GridSpec(100, 1e-2, 1.0),
                   t_end: float = 2.5, config: SolverConfig = SolverConfig(),
                   workers: int | None = None) -> TransitionResult:
    """Compare eps-runs with the limit run along the whole trajectory."""
    models = [PlanarModel(params.with_epsilon(0.0), variant, SystemKind.LIMIT)]
    models += [PlanarModel(params.with_epsilon(e), variant, SystemKind.EPS) for e in epsilons]
    runs = parallel_map(_centerline_job, [(m, grid, t_end, config) for m in models], workers)
    _, base = runs[0]
    tips, lines = {}, {}
    for e, (_, curves) in zip(epsilons, runs[1:]):
        diff = curves - base
        tips[e] = float(np.max(np.linalg.norm(diff[:, -1, :], axis=1)))
        lines[e] = max(l2_norm(d, grid.ds) for d in diff)
    return TransitionResult(tips, lines)
