"""Shared value types, planar geometry helpers and grid norms."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class SystemKind(enum.Enum):
    """Which member of the asymptotic hierarchy a residual describes."""

    EPS = "eps"
    LIMIT = "limit"
    CORRECTION = "correction"

    @classmethod
    def parse(cls, text: str) -> "SystemKind":
        key = text.strip().lower()
        aliases = {"eps": cls.EPS, "epsdependent": cls.EPS, "eps-dependent": cls.EPS,
                   "limit": cls.LIMIT, "correction": cls.CORRECTION}
        if key not in aliases:
            raise ValueError(f"unknown system kind {text!r}")
        return aliases[key]


class Variant(enum.Enum):
    """Rod formulation: which kinematic/geometric/compatibility rows are used."""

    M = "M"
    T = "T"
    S = "S"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown variant {text!r}") from None


@dataclass(frozen=True)
class Parameters:
    """Dimensionless constants of the scaled rod model.

    ``gravity=False`` switches the external force off entirely (used for
    stress-free steady-state checks) instead of sending ``froude`` to infinity.
    """

    epsilon: float = 0.0
    mu: float = 10.0
    a: float = 2.5
    froude: float = 1.0
    gravity: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not (math.isfinite(self.mu) and self.mu > 0.0):
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not (2.0 <= self.a < 3.0):
            raise ValueError(f"a = 2(1+nu) must lie in [2, 3), got {self.a}")
        if not (math.isfinite(self.froude) and self.froude > 0.0):
            raise ValueError(f"froude must be > 0, got {self.froude}")

    @classmethod
    def from_poisson(cls, nu: float, **kwargs) -> "Parameters":
        return cls(a=2.0 * (1.0 + nu), **kwargs)

    @property
    def gravity_strength(self) -> float:
        """Magnitude of the scaled gravity force, Fr^-2 (0 when switched off)."""
        return self.froude ** -2 if self.gravity else 0.0

    def with_epsilon(self, epsilon: float) -> "Parameters":
        return Parameters(epsilon, self.mu, self.a, self.froude, self.gravity)


@dataclass(frozen=True)
class GridSpec:
    """Equidistant grid on s in [0, 1] with fixed time step and lambda-weight."""

    n_cells: int
    dt: float
    lam: float = 1.0

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError(f"need at least 2 cells, got {self.n_cells}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (0.5 <= self.lam <= 1.0):
            raise ValueError(f"lambda must lie in [0.5, 1], got {self.lam}")

    @classmethod
    def from_steps(cls, ds: float, dt: float, lam: float = 1.0) -> "GridSpec":
        n = round(1.0 / ds)
        if abs(n * ds - 1.0) > 1e-9:
            raise ValueError(f"ds={ds} does not divide [0, 1]")
        return cls(n, dt, lam)

    @property
    def ds(self) -> float:
        return 1.0 / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_nodes)

    def n_steps(self, t_end: float) -> int:
        """Number of steps to reach ``t_end``; it must be a multiple of dt."""
        k = round(t_end / self.dt)
        if k < 0 or abs(k * self.dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
            raise ValueError(f"t_end={t_end} is not a multiple of dt={self.dt}")
        return int(k)


#: component names of the planar state, in storage order
PLANAR_COMPONENTS = ("r1", "r2", "alpha", "v1", "v3", "n1", "n3", "omega", "kappa")


@dataclass(frozen=True)
class StateField:
    """Node values of one time level: an immutable (N+1, m) array."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 3:
            raise ValueError(f"expected an (N+1, m) array with N >= 2, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("state contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    def flat(self) -> np.ndarray:
        """Writable copy in node-major order (the solver's unknown vector)."""
        return self.values.reshape(-1).copy()

    @classmethod
    def from_flat(cls, x: np.ndarray, m: int) -> "StateField":
        return cls(np.asarray(x).reshape(-1, m))

    def component(self, index: int) -> np.ndarray:
        return self.values[:, index]

    def __add__(self, other: "StateField") -> "StateField":
        return StateField(self.values + other.values)

    def __sub__(self, other: "StateField") -> "StateField":
        return StateField(self.values - other.values)

    def scaled(self, c: float) -> "StateField":
        return StateField(c * self.values)

    def tolist(self) -> list[list[float]]:
        return self.values.tolist()

    def __eq__(self, other):
        return isinstance(other, StateField) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class BandedMatrix:
    """Square band matrix in LAPACK/``solve_banded`` packed storage.

    ``data[upper + i - j, j] == A[i, j]`` for ``-upper <= i - j <= lower``.
    """

    data: np.ndarray = field(repr=False)
    lower: int
    upper: int

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[0] != self.lower + self.upper + 1:
            raise ValueError("band storage shape does not match bandwidths")

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @classmethod
    def zeros(cls, dim: int, lower: int, upper: int) -> "BandedMatrix":
        return cls(np.zeros((lower + upper + 1, dim)), lower, upper)

    @classmethod
    def from_dense(cls, a: np.ndarray, lower: int, upper: int) -> "BandedMatrix":
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("matrix must be square")
        i, j = np.nonzero(a)
        if np.any(i - j > lower) or np.any(j - i > upper):
            raise ValueError("matrix has entries outside the requested band")
        out = cls.zeros(n, lower, upper)
        out.data[upper + i - j, j] = a[i, j]
        return out

    def to_dense(self) -> np.ndarray:
        n = self.dim
        out = np.zeros((n, n))
        for k in range(self.lower + self.upper + 1):
            offset = self.upper - k  # column minus row
            if offset >= 0:
                j = np.arange(offset, n)
            else:
                j = np.arange(0, n + offset)
            out[j - offset, j] = self.data[k, j]
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        n = self.dim
        y = np.zeros(n)
        for k in range(self.lower + self.upper + 1):
            offset = self.upper - k
            if offset >= 0:
                j = np.arange(offset, n)
            else:
                j = np.arange(0, n + offset)
            y[j - offset] += self.data[k, j] * x[j]
        return y


def rotation2d(alpha: float) -> np.ndarray:
    """Planar director matrix [[-sin a, cos a], [cos a, sin a]].

    Symmetric, orthogonal, det -1 and its own inverse.
    """
    s, c = math.sin(alpha), math.cos(alpha)
    return np.array([[-s, c], [c, s]])


def perp(z) -> np.ndarray:
    """(z1, z3) -> (-z3, z1), vectorized over leading axes."""
    z = np.asarray(z, dtype=float)
    return np.stack([-z[..., 1], z[..., 0]], axis=-1)


def l2_norm(field_values, ds: float) -> float:
    """L2(0, 1) norm of node data by the composite trapezoidal rule.

    Accepts a StateField, an (N+1, m) array or an (N+1,) scalar sequence.
    """
    if isinstance(field_values, StateField):
        arr = field_values.values
    else:
        arr = np.asarray(field_values, dtype=float)
    if arr.ndim == 1:
        sq = arr * arr
    else:
        sq = np.sum(arr * arr, axis=1)
    n_cells = round(1.0 / ds)
    if sq.shape[0] != n_cells + 1:
        raise ValueError(f"expected {n_cells + 1} node values for ds={ds}, got {sq.shape[0]}")
    integral = ds * (0.5 * sq[0] + sq[1:-1].sum() + 0.5 * sq[-1])
    return math.sqrt(integral)
