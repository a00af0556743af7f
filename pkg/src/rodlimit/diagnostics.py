"""Energies, convergence orders and asymptotic-consistency norms (planar)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .planar import KA, N1, N3, OM, R2, V1, V3
from .types import Parameters, StateField, l2_norm


def _trapezoid(density: np.ndarray, ds: float) -> float:
    return float(ds * (0.5 * density[0] + density[1:-1].sum() + 0.5 * density[-1]))


def _check_grid(*fields: StateField) -> None:
    shapes = {f.values.shape for f in fields}
    if len(shapes) != 1:
        raise ValueError(f"fields live on different grids: {sorted(shapes)}")


def energy_w0(state: StateField, params: Parameters, gravity_on: bool | None = None) -> float:
    """Leading-order energy: kinetic + bending + gravity potential, integrated over s.

    The planar bending term uses the in-plane curvature entry of the couple
    law, whose coefficient is 1.
    """
    if gravity_on is None:
        gravity_on = params.gravity
    phi = state.values
    ds = 1.0 / (phi.shape[0] - 1)
    density = 0.5 * (phi[:, V1] ** 2 + phi[:, V3] ** 2) + phi[:, KA] ** 2 / (2.0 * params.mu ** 2)
    if gravity_on:
        density = density + phi[:, R2] / params.froude ** 2
    return _trapezoid(density, ds)


def energy_w1(limit_state: StateField, correction_state: StateField, params: Parameters,
              gravity_on: bool | None = None) -> float:
    """eps^2 coefficient of the energy expansion, integrated over s."""
    _check_grid(limit_state, correction_state)
    if gravity_on is None:
        gravity_on = params.gravity
    p0, p1 = limit_state.values, correction_state.values
    mu2, a = params.mu ** 2, params.a
    ds = 1.0 / (p0.shape[0] - 1)
    density = (p0[:, V1] * p1[:, V1] + p0[:, V3] * p1[:, V3]
               + p0[:, KA] * p1[:, KA] / mu2
               + 0.5 * p0[:, OM] ** 2
               + 0.5 * mu2 * a * (p0[:, N1] ** 2 + p0[:, N3] ** 2 / a))
    if gravity_on:
        density = density + p1[:, R2] / params.froude ** 2
    return _trapezoid(density, ds)


def convergence_order(step_sizes, errors) -> float:
    """Least-squares slope of log(error) against log(step)."""
    h = np.asarray(step_sizes, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.shape != e.shape or h.size < 3:
        raise ValueError("need at least three (step, error) pairs")
    if np.any(~np.isfinite(h)) or np.any(~np.isfinite(e)) or np.any(h <= 0) or np.any(e <= 0):
        raise ValueError("step sizes and errors must be positive and finite")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def fit_order_above_noise(step_sizes, errors, reference_norm: float) -> float | None:
    """Order fit ignoring points lost in round-off (below 1e3*eps*reference_norm).

    Returns None when fewer than three usable points remain.
    """
    h = np.asarray(step_sizes, dtype=float)
    e = np.asarray(errors, dtype=float)
    floor = 1e3 * np.finfo(float).eps * reference_norm
    keep = np.isfinite(e) & (e > floor)
    if keep.sum() < 3:
        return None
    return convergence_order(h[keep], e[keep])


@dataclass(frozen=True)
class ConsistencyReport:
    epsilon: float
    norm_c1_star: float
    norm_c2_star: float
    norm_c1: float
    norm_c2: float
    norm_phi1: float

    @property
    def c1_deviation(self) -> float:
        """Relative gap between ||c1|| and ||phi1||."""
        return abs(self.norm_c1 - self.norm_phi1) / self.norm_phi1


def asymptotic_consistency(phi_eps: StateField, phi0: StateField, phi1: StateField,
                           epsilon: float, ds: float | None = None) -> ConsistencyReport:
    """Norms of c1* = phi_eps - phi0 and c2* = c1* - eps^2 phi1 and their rescalings."""
    _check_grid(phi_eps, phi0, phi1)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if ds is None:
        ds = 1.0 / (phi0.n_nodes - 1)
    e2 = epsilon ** 2
    c1s = phi_eps.values - phi0.values
    c2s = c1s - e2 * phi1.values
    n1s = l2_norm(c1s, ds)
    n2s = l2_norm(c2s, ds)
    return ConsistencyReport(epsilon, n1s, n2s, n1s / e2, n2s / e2 ** 2, l2_norm(phi1, ds))


