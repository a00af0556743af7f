"""Spatial rod (m = 19) with a unit-quaternion director triad.

Storage order per node::

    r (0:3) | q (3:7, scalar first) | v (7:10) | n (10:13) | omega (13:16) | kappa (16:19)

``r`` is in the outer basis; v, n, omega, kappa are director-basis components.
The rotation ``R(q)`` has the directors as columns (``d_k = R e_k``) and the
rates are right-multiplied: ``dq/dt = q * (0, omega) / 2`` and likewise for
``kappa`` in s. Planar motions keep ``d2 = e3``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .planar import BoundarySpec, SplitMatrices, equations_planar
from .types import GridSpec, Parameters, StateField, SystemKind, Variant

M = 19
R_, Q_, V_, N_, W_, K_ = (slice(0, 3), slice(3, 7), slice(7, 10), slice(10, 13),
                          slice(13, 16), slice(16, 19))

#: quaternion of the straight reference triad: d1 = e2, d2 = e3, d3 = e1
Q0 = np.array([0.5, 0.5, 0.5, 0.5])
_E2 = np.array([0.0, 1.0, 0.0])
_E3 = np.array([0.0, 0.0, 1.0])


# -- quaternion algebra ------------------------------------------------------

def quat_mul(p, r) -> np.ndarray:
    p, r = np.asarray(p, float), np.asarray(r, float)
    p0, pv = p[..., :1], p[..., 1:]
    r0, rv = r[..., :1], r[..., 1:]
    scalar = p0 * r0 - np.sum(pv * rv, axis=-1, keepdims=True)
    vec = p0 * rv + r0 * pv + np.cross(pv, rv)
    return np.concatenate([scalar, vec], axis=-1)


def quat_conj(q) -> np.ndarray:
    q = np.asarray(q, float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def _qleft(p: np.ndarray) -> np.ndarray:
    """L(p) with p * r = L(p) r."""
    p0, p1, p2, p3 = (p[..., k] for k in range(4))
    return np.stack([
        np.stack([p0, -p1, -p2, -p3], -1),
        np.stack([p1, p0, -p3, p2], -1),
        np.stack([p2, p3, p0, -p1], -1),
        np.stack([p3, -p2, p1, p0], -1),
    ], -2)


def _qright(r: np.ndarray) -> np.ndarray:
    """R(r) with p * r = R(r) p."""
    r0, r1, r2, r3 = (r[..., k] for k in range(4))
    return np.stack([
        np.stack([r0, -r1, -r2, -r3], -1),
        np.stack([r1, r0, r3, -r2], -1),
        np.stack([r2, -r3, r0, r1], -1),
        np.stack([r3, r2, -r1, r0], -1),
    ], -2)


def _pure(x: np.ndarray) -> np.ndarray:
    return np.concatenate([np.zeros(x.shape[:-1] + (1,)), x], axis=-1)


def skew(x) -> np.ndarray:
    """[x]_x with [x]_x y = x cross y."""
    x = np.asarray(x, float)
    z = np.zeros(x.shape[:-1])
    return np.stack([
        np.stack([z, -x[..., 2], x[..., 1]], -1),
        np.stack([x[..., 2], z, -x[..., 0]], -1),
        np.stack([-x[..., 1], x[..., 0], z], -1),
    ], -2)


def _rot(q: np.ndarray) -> np.ndarray:
    # homogeneous quadratic form; orthogonal only for unit q
    w, u = q[..., 0], q[..., 1:]
    eye = np.eye(3)
    return ((w * w - np.sum(u * u, -1))[..., None, None] * eye
            + 2.0 * u[..., :, None] * u[..., None, :]
            + 2.0 * w[..., None, None] * skew(u))


def _drot_apply(q: np.ndarray, x: np.ndarray, transpose: bool = False) -> np.ndarray:
    """d(R(q) x)/dq (or of R(q)^T x), shape (..., 3, 4)."""
    w, u = q[..., 0], q[..., 1:]
    sign = -1.0 if transpose else 1.0
    ux = np.sum(u * x, -1)
    dw = 2.0 * w[..., None] * x + sign * 2.0 * np.cross(u, x)
    du = (-2.0 * x[..., :, None] * u[..., None, :]
          + 2.0 * (ux[..., None, None] * np.eye(3) + u[..., :, None] * x[..., None, :])
          - sign * 2.0 * w[..., None, None] * skew(x))
    return np.concatenate([dw[..., None], du], axis=-1)


def quat_to_rotation(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion (scalar first)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"expected a 4-vector, got shape {q.shape}")
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"quaternion is not unit (norm {norm:.9g})")
    return _rot(q)


# -- equation catalogue ----------------------------------------------------------

# row groups and their sizes
_GROUPS = {
    "kin_r": 3, "kin_q": 4, "geo_r": 3, "geo_q": 4,
    "comp_n": 3, "comp_kappa": 3, "bal_v": 3, "bal_omega": 3,
}
_VARIANT_GROUPS = {
    Variant.T: ("kin_r", "kin_q", "comp_n", "comp_kappa", "bal_v", "bal_omega"),
    Variant.S: ("geo_r", "geo_q", "comp_n", "comp_kappa", "bal_v", "bal_omega"),
    # geo_q3 is the 3-component spatial rotation row 2 vec(conj(q) * q') - kappa
    Variant.M: ("kin_r", "kin_q", "geo_r", "geo_q3", "bal_v", "bal_omega"),
}


def _offsets(groups) -> dict[str, slice]:
    out, k = {}, 0
    for g in groups:
        size = 3 if g == "geo_q3" else _GROUPS[g]
        out[g] = slice(k, k + size)
        k += size
    return out


_CAT = _offsets(tuple(_GROUPS))
_NCAT = 26


def _diag_params(params: Parameters):
    mu2, a = params.mu ** 2, params.a
    pa = mu2 * np.diag([a, a, 1.0])          # mu^2 a P_{1/a}
    p2 = np.diag([1.0, 1.0, 2.0])
    p2a = np.diag([1.0, 1.0, 2.0 / a])
    return pa, p2, p2a


def _catalogue_matrices(params: Parameters):
    pa, p2, p2a = _diag_params(params)
    eye = np.eye(3)
    a0, a1, b0, b1 = (np.zeros((_NCAT, M)) for _ in range(4))
    c = _CAT
    a0[c["kin_r"], R_] = eye
    a0[c["kin_q"], Q_] = np.eye(4)
    b0[c["geo_r"], R_] = eye
    b0[c["geo_q"], Q_] = np.eye(4)
    a1[c["comp_n"], N_] = pa
    b0[c["comp_n"], V_] = -eye
    a0[c["comp_kappa"], K_] = eye
    b0[c["comp_kappa"], W_] = -eye
    a0[c["bal_v"], V_] = eye
    b0[c["bal_v"], N_] = -eye
    a1[c["bal_omega"], W_] = p2
    b0[c["bal_omega"], K_] = -p2a / params.mu ** 2
    return a0, a1, b0, b1


def _split(x):
    return x[..., R_], x[..., Q_], x[..., V_], x[..., N_], x[..., W_], x[..., K_]


def _catalogue_source(params: Parameters, x: np.ndarray):
    pa, p2, p2a = _diag_params(params)
    g = params.gravity_strength
    _, q, v, n, w, k = _split(x)
    rot = _rot(q)
    rot_t = np.swapaxes(rot, -1, -2)
    pn = n @ pa.T
    c0 = np.zeros(x.shape[:-1] + (_NCAT,))
    c1 = np.zeros_like(c0)
    c = _CAT
    c0[..., c["kin_r"]] = -np.einsum("...ij,...j->...i", rot, v)
    c0[..., c["kin_q"]] = -0.5 * quat_mul(q, _pure(w))
    c0[..., c["geo_r"]] = -rot[..., :, 2]
    c1[..., c["geo_r"]] = -np.einsum("...ij,...j->...i", rot, pn)
    c0[..., c["geo_q"]] = -0.5 * quat_mul(q, _pure(k))
    c0[..., c["comp_n"]] = -np.cross(k, v) - np.cross(_E3, w)
    c1[..., c["comp_n"]] = -np.cross(pn, w)
    c0[..., c["comp_kappa"]] = -np.cross(k, w)
    c0[..., c["bal_v"]] = -np.cross(k, n) - np.cross(v, w) + g * rot_t[..., :, 1]
    c0[..., c["bal_omega"]] = -np.cross(k, k @ p2a.T) / params.mu ** 2 - np.cross(_E3, n)
    c1[..., c["bal_omega"]] = -np.cross(pn, n) - np.cross(w @ p2.T, w)
    return c0, c1


def _catalogue_source_jacobian(params: Parameters, x: np.ndarray):
    pa, p2, p2a = _diag_params(params)
    g, mu2 = params.gravity_strength, params.mu ** 2
    _, q, v, n, w, k = _split(x)
    shape = x.shape[:-1]
    j0 = np.zeros(shape + (_NCAT, M))
    j1 = np.zeros_like(j0)
    c = _CAT
    rot = _rot(q)
    pn = n @ pa.T
    e3 = np.broadcast_to(_E3, v.shape)

    j0[..., c["kin_r"], Q_] = -_drot_apply(q, v)
    j0[..., c["kin_r"], V_] = -rot
    j0[..., c["kin_q"], Q_] = -0.5 * _qright(_pure(w))
    j0[..., c["kin_q"], W_] = -0.5 * _qleft(q)[..., :, 1:]

    j0[..., c["geo_r"], Q_] = -_drot_apply(q, e3)
    j1[..., c["geo_r"], Q_] = -_drot_apply(q, pn)
    j1[..., c["geo_r"], N_] = -rot @ pa
    j0[..., c["geo_q"], Q_] = -0.5 * _qright(_pure(k))
    j0[..., c["geo_q"], K_] = -0.5 * _qleft(q)[..., :, 1:]

    j0[..., c["comp_n"], K_] = skew(v)
    j0[..., c["comp_n"], V_] = -skew(k)
    j0[..., c["comp_n"], W_] = -skew(e3)
    j1[..., c["comp_n"], N_] = skew(w) @ pa
    j1[..., c["comp_n"], W_] = -skew(pn)

    j0[..., c["comp_kappa"], K_] = skew(w)
    j0[..., c["comp_kappa"], W_] = -skew(k)

    j0[..., c["bal_v"], K_] = skew(n)
    j0[..., c["bal_v"], N_] = -skew(k)
    j0[..., c["bal_v"], V_] = skew(w)
    j0[..., c["bal_v"], W_] = -skew(v)
    j0[..., c["bal_v"], Q_] = g * _drot_apply(q, np.broadcast_to(_E2, v.shape), transpose=True)

    j0[..., c["bal_omega"], K_] = -(skew(k) @ p2a - skew(k @ p2a.T)) / mu2
    j0[..., c["bal_omega"], N_] = -skew(e3)
    j1[..., c["bal_omega"], N_] = -(skew(pn) - skew(n) @ pa)
    j1[..., c["bal_omega"], W_] = -(skew(w @ p2.T) - skew(w) @ p2)
    return j0, j1


def _catalogue_rows(variant: Variant) -> list[int]:
    groups = _VARIANT_GROUPS[variant]
    if "geo_q3" in groups:
        raise ValueError("variant M has no constant-coefficient form in 3D")
    rows = []
    for g in groups:
        rows.extend(range(_CAT[g].start, _CAT[g].stop))
    return rows


def equations_3d(variant: Variant) -> dict[str, slice]:
    """Row slices of each equation group of ``variant`` (19 rows in total)."""
    return _offsets(_VARIANT_GROUPS[variant])


# -- pointwise residual ----------------------------------------------------------

def residual_3d(kind: SystemKind, params: Parameters, state, dt_state, ds_state,
                variant: Variant = Variant.S) -> np.ndarray:
    """Residual of the spatial system at given (Phi, dPhi/dt, dPhi/ds).

    LIMIT and CORRECTION evaluate the limit operator, EPS adds the eps^2 terms.
    Vectorized over leading axes.
    """
    x, xt, xs = (np.asarray(z, dtype=float) for z in (state, dt_state, ds_state))
    a0, a1, b0, b1 = _catalogue_matrices(params)
    c0, c1 = _catalogue_source(params, x)
    full = xt @ a0.T + xs @ b0.T + c0
    if kind is SystemKind.EPS:
        full = full + params.epsilon ** 2 * (xt @ a1.T + xs @ b1.T + c1)
    parts = []
    for g in _VARIANT_GROUPS[variant]:
        if g == "geo_q3":
            q = x[..., Q_]
            parts.append(2.0 * quat_mul(quat_conj(q), xs[..., Q_])[..., 1:] - x[..., K_])
        else:
            parts.append(full[..., _CAT[g]])
    return np.concatenate(parts, axis=-1)


# -- planar embedding ----------------------------------------------------------------

@dataclass(frozen=True)
class SpatialState:
    """One spatial node state; ``q`` must be unit within 1e-9."""

    r: np.ndarray
    q: np.ndarray
    v: np.ndarray
    n: np.ndarray
    omega: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        for name in ("r", "q", "v", "n", "omega", "kappa"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if abs(np.linalg.norm(self.q) - 1.0) > 1e-9:
            raise ValueError("director quaternion is not unit")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.r, self.q, self.v, self.n, self.omega, self.kappa])

    @classmethod
    def from_vector(cls, x) -> "SpatialState":
        x = np.asarray(x, dtype=float)
        return cls(*_split(x))


def _qz(alpha):
    half = 0.5 * np.asarray(alpha, float)
    z = np.zeros_like(half)
    return np.stack([np.cos(half), z, z, np.sin(half)], axis=-1)


def embed_planar_array(phi) -> np.ndarray:
    """Vectorized embedding (..., 9) -> (..., 19)."""
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape[:-1] + (M,))
    out[..., 0:2] = phi[..., 0:2]
    out[..., Q_] = quat_mul(_qz(phi[..., 2]), Q0)
    out[..., 7], out[..., 9] = phi[..., 3], phi[..., 4]
    out[..., 10], out[..., 12] = phi[..., 5], phi[..., 6]
    out[..., 14] = phi[..., 7]
    out[..., 17] = phi[..., 8]
    return out


def embed_planar(phi9) -> SpatialState:
    """Spatial state of a planar one: d2 = e3 and the triad turned by alpha about e3."""
    phi9 = np.asarray(phi9, dtype=float)
    if phi9.shape != (9,):
        raise ValueError(f"expected a planar 9-vector, got shape {phi9.shape}")
    return SpatialState.from_vector(embed_planar_array(phi9))


def embed_planar_tangent(phi, dphi) -> np.ndarray:
    """Push a planar derivative (in t or s) forward through the embedding."""
    phi, dphi = np.asarray(phi, float), np.asarray(dphi, float)
    lin = dphi.copy()
    lin[..., 2] = 0.0
    out = embed_planar_array(lin)
    q = quat_mul(_qz(phi[..., 2]), Q0)
    zq = quat_mul(np.broadcast_to([0.0, 0.0, 0.0, 1.0], q.shape), q)
    out[..., Q_] = 0.5 * dphi[..., 2:3] * zq
    return out


def project_planar(x) -> np.ndarray:
    """Inverse of the embedding on planar states (..., 19) -> (..., 9)."""
    x = np.asarray(x, dtype=float)
    qz = quat_mul(x[..., Q_], quat_conj(Q0))
    alpha = 2.0 * np.arctan2(qz[..., 3], qz[..., 0])
    return np.stack([x[..., 0], x[..., 1], alpha, x[..., 7], x[..., 9], x[..., 10], x[..., 12],
                     x[..., 14], x[..., 17]], axis=-1)


def planar_rows(res, state, variant: Variant) -> tuple[np.ndarray, np.ndarray]:
    """Split a spatial residual at an embedded state into (planar 9 rows, off-plane rest).

    The planar angle rows are the quaternion rows projected on ``2 (e3 * q)``.
    """
    res, x = np.asarray(res, float), np.asarray(state, float)
    off = equations_3d(variant)
    zq = quat_mul(np.broadcast_to([0.0, 0.0, 0.0, 1.0], x[..., Q_].shape), x[..., Q_])
    pieces, rest = {}, []
    for g, sl in off.items():
        block = res[..., sl]
        if g in ("kin_q", "geo_q"):
            coef = np.sum(zq * block, axis=-1)
            pieces[g] = (2.0 * coef,)
            rest.append(block - coef[..., None] * zq)
        elif g == "geo_q3":
            pieces[g] = (block[..., 1],)
            rest.append(block[..., [0, 2]])
        elif g in ("comp_kappa", "bal_omega"):
            pieces[g] = (block[..., 1],)
            rest.append(block[..., [0, 2]])
        elif g in ("kin_r", "geo_r"):
            pieces[g] = (block[..., 0], block[..., 1])
            rest.append(block[..., 2:])
        else:
            pieces[g] = (block[..., 0], block[..., 2])
            rest.append(block[..., 1:2])
    names = {"kin_r1": ("kin_r", 0), "kin_r2": ("kin_r", 1), "kin_alpha": ("kin_q", 0),
             "geo_r1": ("geo_r", 0), "geo_r2": ("geo_r", 1), "geo_alpha": ("geo_q", 0),
             "comp_n1": ("comp_n", 0), "comp_n3": ("comp_n", 1), "comp_kappa": ("comp_kappa", 0),
             "bal_v1": ("bal_v", 0), "bal_v3": ("bal_v", 1), "bal_omega": ("bal_omega", 0)}
    if variant is Variant.M:
        names["geo_alpha"] = ("geo_q3", 0)
    planar = np.stack([pieces[names[nm][0]][names[nm][1]] for nm in equations_planar(variant)],
                      axis=-1)
    return planar, np.concatenate(rest, axis=-1)


# -- engine model ------------------------------------------------------------------

def boundary_spec_3d(variant: Variant) -> BoundarySpec:
    vel = tuple((7 + k, 0.0) for k in range(3)) + tuple((13 + k, 0.0) for k in range(3))
    right = tuple((10 + k, 0.0) for k in range(3)) + tuple((16 + k, 0.0) for k in range(3))
    if variant is Variant.S:
        clamp = tuple((k, 0.0) for k in range(3)) + tuple((3 + k, float(Q0[k])) for k in range(4))
        return BoundarySpec(clamp + vel, (), right)
    if variant is Variant.T:
        return BoundarySpec(vel, tuple(range(7)), right)
    raise ValueError("spatial stepping supports variants T and S")


@dataclass(frozen=True)
class SpatialModel:
    """Spatial cantilever for the generic engine (variants T and S)."""

    params: Parameters
    variant: Variant = Variant.S
    kind: SystemKind = SystemKind.LIMIT
    m: int = field(default=M, init=False)

    def __post_init__(self):
        rows = _catalogue_rows(self.variant)
        mats = _catalogue_matrices(self.params)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "matrices", SplitMatrices(*(x[rows] for x in mats)))
        object.__setattr__(self, "boundary", boundary_spec_3d(self.variant))

    @property
    def equations(self) -> dict[str, slice]:
        return equations_3d(self.variant)

    def source_parts(self, x: np.ndarray):
        c0, c1 = _catalogue_source(self.params, np.asarray(x, float))
        return c0[..., self._rows], c1[..., self._rows]

    def source_jacobian_parts(self, x: np.ndarray):
        j0, j1 = _catalogue_source_jacobian(self.params, np.asarray(x, float))
        return j0[..., self._rows, :], j1[..., self._rows, :]

    def initial_state(self, grid: GridSpec) -> StateField:
        values = np.zeros((grid.n_nodes, M))
        values[:, 0] = grid.nodes
        values[:, Q_] = Q0
        return StateField(values)

    def normalize(self, values: np.ndarray) -> np.ndarray:
        out = np.array(values, dtype=float)
        q = out[:, Q_]
        out[:, Q_] = q / np.linalg.norm(q, axis=1, keepdims=True)
        return out

    def with_kind(self, kind: SystemKind) -> "SpatialModel":
        return SpatialModel(self.params, self.variant, kind)


def energy_density_w0(x, params: Parameters) -> np.ndarray:
    """Leading-order energy density 1/2|v|^2 + kappa.P_{2/a}.kappa/(2 mu^2) + r2/Fr^2."""
    x = np.asarray(x, dtype=float)
    _, _, p2a = _diag_params(params)
    v, k = x[..., V_], x[..., K_]
    dens = 0.5 * np.sum(v * v, -1) + np.sum(k * (k @ p2a.T), -1) / (2.0 * params.mu ** 2)
    return dens + params.gravity_strength * x[..., 1]
