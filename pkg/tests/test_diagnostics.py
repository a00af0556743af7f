import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from rodlimit.diagnostics import (asymptotic_consistency, convergence_order, energy_w0, energy_w1,
                                  fit_order_above_noise)
from rodlimit.planar import KA, N1, N3, OM, R1, R2, V1, V3
from rodlimit.types import GridSpec, Parameters, StateField, l2_norm

GRID = GridSpec(40, 0.01)
S = GRID.nodes


def _field(**cols):
    values = np.zeros((GRID.n_nodes, 9))
    for k, v in cols.items():
        values[:, globals()[k]] = v
    return StateField(values)


def test_w0_examples():
    p = Parameters(mu=10.0, froude=2.0)
    assert energy_w0(_field(R1=S), p) == 0.0
    assert energy_w0(_field(V1=1.0), p) == pytest.approx(0.5)
    assert energy_w0(_field(V1=0.6, V3=0.8), p) == pytest.approx(0.5)
    assert energy_w0(_field(KA=10.0), p) == pytest.approx(0.5)
    assert energy_w0(_field(R2=S), p) == pytest.approx(0.125)
    assert energy_w0(_field(R2=S), p, gravity_on=False) == 0.0


def _w1_oracle(p0, p1, params):
    mu2, a = params.mu ** 2, params.a
    dens = (p0[:, V1] * p1[:, V1] + p0[:, V3] * p1[:, V3] + p0[:, KA] * p1[:, KA] / mu2
            + p0[:, OM] ** 2 / 2 + mu2 * a / 2 * p0[:, N1] ** 2 + mu2 / 2 * p0[:, N3] ** 2
            + p1[:, R2] / params.froude ** 2)
    return trapezoid(dens, S)


def test_w1_transcription():
    rng = np.random.default_rng(41)
    params = Parameters(mu=3.0, a=2.4, froude=0.7)
    for _ in range(20):
        p0, p1 = rng.normal(size=(2, GRID.n_nodes, 9))
        got = energy_w1(StateField(p0), StateField(p1), params)
        assert got == pytest.approx(_w1_oracle(p0, p1, params), rel=1e-12)


def test_w1_is_affine_in_correction():
    rng = np.random.default_rng(42)
    params = Parameters(mu=5.0)
    p0, c, d = (StateField(x) for x in rng.normal(size=(3, GRID.n_nodes, 9)))
    zero = StateField(np.zeros_like(p0.values))
    base = energy_w1(p0, zero, params)
    lhs = energy_w1(p0, c.scaled(2.0) + d.scaled(-3.0), params) - base
    rhs = 2.0 * (energy_w1(p0, c, params) - base) - 3.0 * (energy_w1(p0, d, params) - base)
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


def test_w1_rejects_mismatched_grids():
    with pytest.raises(ValueError):
        energy_w1(StateField(np.zeros((5, 9))), StateField(np.zeros((6, 9))), Parameters())


@settings(max_examples=60)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-5, 5))
def test_w0_nonnegative_without_gravity_and_translation_invariant(seed, shift):
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=(GRID.n_nodes, 9))
    params = Parameters(gravity=False)
    w = energy_w0(StateField(phi), params)
    assert w >= 0.0
    moved = phi.copy()
    moved[:, R1] += shift
    assert energy_w0(StateField(moved), params) == pytest.approx(w, rel=1e-13)


# -- orders ---------------------------------------------------------------------

@settings(max_examples=60)
@given(st.floats(0.5, 4.0), st.floats(1e-3, 1e3))
def test_order_recovers_power_law(p, c):
    h = np.array([0.1, 0.05, 0.025, 0.0125])
    assert convergence_order(h, c * h ** p) == pytest.approx(p, abs=1e-9)
    assert convergence_order(h, 7.0 * c * h ** p) == pytest.approx(p, abs=1e-9)


def test_order_examples():
    assert convergence_order([1, 2, 4], [1, 4, 16]) == pytest.approx(2.0)
    assert convergence_order([1, 2, 4, 8], [3, 3, 3, 3]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("h,e", [([1, 2], [1, 4]), ([1, 2, 3], [1, 0, 2]), ([1, 2, 3], [1, 2]),
                                 ([1, -2, 3], [1, 2, 3]), ([1, 2, 3], [1, np.nan, 3])])
def test_order_rejects_bad_data(h, e):
    with pytest.raises(ValueError):
        convergence_order(h, e)


def test_noise_points_are_dropped():
    h = np.logspace(-1, -6, 6)
    e = h ** 2
    e[-2:] = 1e-15              # round-off plateau
    assert fit_order_above_noise(h, e, 1.0) == pytest.approx(2.0)
    assert fit_order_above_noise(h[-3:], e[-3:], 1.0) is None


# -- consistency norms ------------------------------------------------------------------

def test_consistency_identities():
    rng = np.random.default_rng(43)
    phi0, phi1, phi2 = rng.normal(size=(3, GRID.n_nodes, 9))
    for eps in (1e-1, 1e-2):
        phi_eps = phi0 + eps ** 2 * phi1 + eps ** 4 * phi2
        rep = asymptotic_consistency(StateField(phi_eps), StateField(phi0), StateField(phi1), eps)
        n1 = l2_norm(phi1, GRID.ds)
        assert rep.norm_phi1 == pytest.approx(n1)
        assert rep.norm_c2 == pytest.approx(l2_norm(phi2, GRID.ds), rel=1e-6)
        assert rep.norm_c1 == pytest.approx(l2_norm(phi1 + eps ** 2 * phi2, GRID.ds), rel=1e-9)
        assert rep.norm_c1_star == pytest.approx(eps ** 2 * rep.norm_c1, rel=1e-12)
        assert rep.norm_c2_star == pytest.approx(eps ** 4 * rep.norm_c2, rel=1e-12)
        assert rep.c1_deviation <= 2 * eps ** 2 * l2_norm(phi2, GRID.ds) / n1


def test_consistency_rejects_bad_input():
    f = StateField(np.zeros((5, 9)))
    with pytest.raises(ValueError):
        asymptotic_consistency(f, f, f, 0.0)
    with pytest.raises(ValueError):
        asymptotic_consistency(f, f, StateField(np.zeros((6, 9))), 0.1)


def test_l2_norm_of_constant():
    assert l2_norm(np.full((GRID.n_nodes, 9), 2.0), GRID.ds) == pytest.approx(6.0)
