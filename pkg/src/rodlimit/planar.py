"""Planar cantilever rod (m = 9) in the form A dPhi/dt + B dPhi/ds + c(Phi) = 0.

Unknowns per node, in storage order::

    (r1, r2, alpha, v1, v3, n1, n3, omega, kappa)

Every coefficient matrix splits as ``X = X0 + eps**2 X1`` and the source as
``c = c0 + eps**2 c1``. Kinematic and geometric rows are written as
``dr/dt - D(alpha) v`` and ``dr/ds - D(alpha)(...)``, so every state-dependent
coefficient sits in ``c`` and the matrices stay constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import GridSpec, Parameters, StateField, SystemKind, Variant

R1, R2, AL, V1, V3, N1, N3, OM, KA = range(9)
M = 9

# catalogue of every equation row any variant may use
EQUATIONS = (
    "kin_r1", "kin_r2", "kin_alpha",
    "geo_r1", "geo_r2", "geo_alpha",
    "comp_n1", "comp_n3", "comp_kappa",
    "bal_v1", "bal_v3", "bal_omega",
)
_ROW = {name: k for k, name in enumerate(EQUATIONS)}

_KIN = ("kin_r1", "kin_r2", "kin_alpha")
_GEO = ("geo_r1", "geo_r2", "geo_alpha")
_COMP = ("comp_n1", "comp_n3", "comp_kappa")
_BAL = ("bal_v1", "bal_v3", "bal_omega")

_VARIANT_EQUATIONS = {
    Variant.M: _KIN + _GEO + _BAL,
    Variant.T: _KIN + _COMP + _BAL,
    Variant.S: _GEO + _COMP + _BAL,
}


def equations_planar(variant: Variant) -> tuple[str, ...]:
    """Names of the nine equation rows used by ``variant``, in row order."""
    return _VARIANT_EQUATIONS[variant]


@dataclass(frozen=True)
class SplitMatrices:
    a0: np.ndarray
    a1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray


def _catalogue_matrices(params: Parameters):
    mu2 = params.mu ** 2
    a0 = np.zeros((len(EQUATIONS), M))
    a1 = np.zeros_like(a0)
    b0 = np.zeros_like(a0)
    b1 = np.zeros_like(a0)
    r = _ROW
    a0[r["kin_r1"], R1] = 1.0
    a0[r["kin_r2"], R2] = 1.0
    a0[r["kin_alpha"], AL] = 1.0
    b0[r["geo_r1"], R1] = 1.0
    b0[r["geo_r2"], R2] = 1.0
    b0[r["geo_alpha"], AL] = 1.0
    a1[r["comp_n1"], N1] = mu2 * params.a
    a1[r["comp_n3"], N3] = mu2
    b0[r["comp_n1"], V1] = -1.0
    b0[r["comp_n3"], V3] = -1.0
    a0[r["comp_kappa"], KA] = 1.0
    b0[r["comp_kappa"], OM] = -1.0
    a0[r["bal_v1"], V1] = 1.0
    a0[r["bal_v3"], V3] = 1.0
    b0[r["bal_v1"], N1] = -1.0
    b0[r["bal_v3"], N3] = -1.0
    a1[r["bal_omega"], OM] = 1.0
    b0[r["bal_omega"], KA] = -1.0 / mu2
    return a0, a1, b0, b1


def _rows(variant: Variant) -> list[int]:
    return [_ROW[name] for name in equations_planar(variant)]


def split_matrices(variant: Variant, params: Parameters) -> SplitMatrices:
    """Constant coefficient matrices (a0, a1, b0, b1) of ``variant``."""
    rows = _rows(variant)
    return SplitMatrices(*(mat[rows] for mat in _catalogue_matrices(params)))


def _catalogue_source(params: Parameters, phi: np.ndarray):
    """c0 and c1 for every catalogue row; phi has shape (..., 9)."""
    mu2, a, g = params.mu ** 2, params.a, params.gravity_strength
    al = phi[..., AL]
    s, c = np.sin(al), np.cos(al)
    v1, v3, n1, n3 = phi[..., V1], phi[..., V3], phi[..., N1], phi[..., N3]
    om, ka = phi[..., OM], phi[..., KA]
    zero = np.zeros_like(al)
    c0 = np.stack([
        -(-s * v1 + c * v3),          # kin_r1
        -(c * v1 + s * v3),           # kin_r2
        -om,                          # kin_alpha
        -c,                           # geo_r1
        -s,                           # geo_r2
        -ka,                          # geo_alpha
        -ka * v3 + om,                # comp_n1
        ka * v1,                      # comp_n3
        zero,                         # comp_kappa
        -ka * n3 + om * v3 + g * c,   # bal_v1
        ka * n1 - om * v1 + g * s,    # bal_v3
        -n1,                          # bal_omega
    ], axis=-1)
    c1 = np.stack([
        zero, zero, zero,
        -mu2 * (-s * a * n1 + c * n3),
        -mu2 * (c * a * n1 + s * n3),
        zero,
        mu2 * om * n3,
        -mu2 * a * om * n1,
        zero,
        zero, zero,
        -mu2 * (1.0 - a) * n1 * n3,
    ], axis=-1)
    return c0, c1


def _catalogue_source_jacobian(params: Parameters, phi: np.ndarray):
    mu2, a, g = params.mu ** 2, params.a, params.gravity_strength
    shape = phi.shape[:-1]
    j0 = np.zeros(shape + (len(EQUATIONS), M))
    j1 = np.zeros_like(j0)
    al = phi[..., AL]
    s, c = np.sin(al), np.cos(al)
    v1, v3, n1, n3 = phi[..., V1], phi[..., V3], phi[..., N1], phi[..., N3]
    om, ka = phi[..., OM], phi[..., KA]
    r = _ROW

    j0[..., r["kin_r1"], AL] = c * v1 + s * v3
    j0[..., r["kin_r1"], V1] = s
    j0[..., r["kin_r1"], V3] = -c
    j0[..., r["kin_r2"], AL] = s * v1 - c * v3
    j0[..., r["kin_r2"], V1] = -c
    j0[..., r["kin_r2"], V3] = -s
    j0[..., r["kin_alpha"], OM] = -1.0
    j0[..., r["geo_r1"], AL] = s
    j0[..., r["geo_r2"], AL] = -c
    j0[..., r["geo_alpha"], KA] = -1.0
    j0[..., r["comp_n1"], KA] = -v3
    j0[..., r["comp_n1"], V3] = -ka
    j0[..., r["comp_n1"], OM] = 1.0
    j0[..., r["comp_n3"], KA] = v1
    j0[..., r["comp_n3"], V1] = ka
    j0[..., r["bal_v1"], KA] = -n3
    j0[..., r["bal_v1"], N3] = -ka
    j0[..., r["bal_v1"], OM] = v3
    j0[..., r["bal_v1"], V3] = om
    j0[..., r["bal_v1"], AL] = -g * s
    j0[..., r["bal_v3"], KA] = n1
    j0[..., r["bal_v3"], N1] = ka
    j0[..., r["bal_v3"], OM] = -v1
    j0[..., r["bal_v3"], V1] = -om
    j0[..., r["bal_v3"], AL] = g * c
    j0[..., r["bal_omega"], N1] = -1.0

    j1[..., r["geo_r1"], AL] = mu2 * (c * a * n1 + s * n3)
    j1[..., r["geo_r1"], N1] = mu2 * s * a
    j1[..., r["geo_r1"], N3] = -mu2 * c
    j1[..., r["geo_r2"], AL] = -mu2 * (-s * a * n1 + c * n3)
    j1[..., r["geo_r2"], N1] = -mu2 * c * a
    j1[..., r["geo_r2"], N3] = -mu2 * s
    j1[..., r["comp_n1"], OM] = mu2 * n3
    j1[..., r["comp_n1"], N3] = mu2 * om
    j1[..., r["comp_n3"], OM] = -mu2 * a * n1
    j1[..., r["comp_n3"], N1] = -mu2 * a * om
    j1[..., r["bal_omega"], N1] = -mu2 * (1.0 - a) * n3
    j1[..., r["bal_omega"], N3] = -mu2 * (1.0 - a) * n1
    return j0, j1


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary block of the global system.

    ``left_dirichlet``/``right_dirichlet`` hold (component, value) pairs
    prescribed at s=0 / s=1. ``left_closures`` are equation rows (indices
    into the model's row order, with zero B-row) enforced at node s=0 with
    the two-point time stencil.
    """

    left_dirichlet: tuple[tuple[int, float], ...]
    left_closures: tuple[int, ...]
    right_dirichlet: tuple[tuple[int, float], ...]

    @property
    def n_left(self) -> int:
        return len(self.left_dirichlet) + len(self.left_closures)

    @property
    def n_rows(self) -> int:
        return self.n_left + len(self.right_dirichlet)


def boundary_spec(variant: Variant) -> BoundarySpec:
    eqs = equations_planar(variant)
    if variant is Variant.S:
        return BoundarySpec(((R1, 0.0), (R2, 0.0), (AL, 0.0), (V1, 0.0), (V3, 0.0), (OM, 0.0)),
                            (), ((N1, 0.0), (N3, 0.0), (KA, 0.0)))
    if variant is Variant.T:
        closures = tuple(eqs.index(name) for name in _KIN)
        return BoundarySpec(((V1, 0.0), (V3, 0.0), (OM, 0.0)), closures,
                            ((N1, 0.0), (N3, 0.0), (KA, 0.0)))
    closures = (eqs.index("kin_r1"), eqs.index("kin_r2"))
    return BoundarySpec(((R1, 0.0), (R2, 0.0), (AL, 0.0), (OM, 0.0)), closures,
                        ((N1, 0.0), (N3, 0.0), (KA, 0.0)))


@dataclass(frozen=True)
class PlanarModel:
    """2D cantilever under gravity, one variant and one system kind."""

    params: Parameters
    variant: Variant = Variant.S
    kind: SystemKind = SystemKind.LIMIT
    m: int = field(default=M, init=False)

    def __post_init__(self):
        rows = _rows(self.variant)
        mats = split_matrices(self.variant, self.params)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "boundary", boundary_spec(self.variant))

    @property
    def equations(self) -> tuple[str, ...]:
        return equations_planar(self.variant)

    def source_parts(self, phi: np.ndarray):
        c0, c1 = _catalogue_source(self.params, phi)
        return c0[..., self._rows], c1[..., self._rows]

    def source_jacobian_parts(self, phi: np.ndarray):
        j0, j1 = _catalogue_source_jacobian(self.params, phi)
        return j0[..., self._rows, :], j1[..., self._rows, :]

    def initial_state(self, grid: GridSpec) -> StateField:
        return initial_state(grid)

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return values

    def with_kind(self, kind: SystemKind) -> "PlanarModel":
        return PlanarModel(self.params, self.variant, kind)


def source_planar(kind: SystemKind, params: Parameters, phi, variant: Variant = Variant.S) -> np.ndarray:
    """Nonlinear source c of the selected system.

    EPS returns c0 + eps^2 c1, LIMIT returns c0. CORRECTION also returns c0:
    the correction operator is the linearisation of the limit source, its
    eps^2 part enters only through :func:`correction_rhs`.
    """
    phi = np.asarray(phi, dtype=float)
    c0, c1 = PlanarModel(params, variant, kind).source_parts(phi)
    if kind is SystemKind.EPS:
        return c0 + params.epsilon ** 2 * c1
    return c0


def source_jacobian_planar(kind: SystemKind, params: Parameters, phi,
                           variant: Variant = Variant.S) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    j0, j1 = PlanarModel(params, variant, kind).source_jacobian_parts(phi)
    if kind is SystemKind.EPS:
        return j0 + params.epsilon ** 2 * j1
    return j0


def correction_rhs(params: Parameters, phi0, dt_phi0, ds_phi0, variant: Variant = Variant.S) -> np.ndarray:
    """Right-hand side f[Phi0] = -(a1 dPhi0/dt + b1 dPhi0/ds + c1(Phi0))."""
    model = PlanarModel(params, variant, SystemKind.CORRECTION)
    mats = model.matrices
    phi0 = np.asarray(phi0, dtype=float)
    _, c1 = model.source_parts(phi0)
    return -(np.asarray(dt_phi0) @ mats.a1.T + np.asarray(ds_phi0) @ mats.b1.T + c1)


def initial_state(grid: GridSpec) -> StateField:
    """Straight, stress-free rod at rest along e1."""
    values = np.zeros((grid.n_nodes, M))
    values[:, R1] = grid.nodes
    return StateField(values)


def residual_planar(kind: SystemKind, params: Parameters, phi, dt_phi, ds_phi,
                    variant: Variant = Variant.S) -> np.ndarray:
    """Pointwise residual A dPhi/dt + B dPhi/ds + c(Phi) of the selected system."""
    model = PlanarModel(params, variant, kind)
    mats = model.matrices
    dt_phi, ds_phi = np.asarray(dt_phi, dtype=float), np.asarray(ds_phi, dtype=float)
    res = dt_phi @ mats.a0.T + ds_phi @ mats.b0.T
    if kind is SystemKind.EPS:
        res = res + params.epsilon ** 2 * (dt_phi @ mats.a1.T + ds_phi @ mats.b1.T)
    return res + source_planar(kind, params, phi, variant)


def boundary_residual(variant: Variant, kind: SystemKind, phi_left_new, phi_left_old,
                      phi_right_new, phi_right_old, grid: GridSpec,
                      params: Parameters = Parameters()) -> np.ndarray:
    """The nine boundary rows: left rows first, then right rows.

    CORRECTION uses homogeneous data; its closure rows are those of the limit
    operator (the correction forcing is added by the engine).
    """
    from .engine import boundary_residual as _engine_boundary

    stepping = SystemKind.LIMIT if kind is SystemKind.CORRECTION else kind
    model = PlanarModel(params, variant, stepping)
    old = np.stack([np.asarray(phi_left_old, float), np.asarray(phi_right_old, float)])
    new = np.stack([np.asarray(phi_left_new, float), np.asarray(phi_right_new, float)])
    left, right = _engine_boundary(model, old, new, grid,
                                   homogeneous=kind is SystemKind.CORRECTION)
    return np.concatenate([left, right])
