"""Slender elastic rods: eps-dependent system, Kirchhoff-beam limit and first-order correction."""

from .diagnostics import (ConsistencyReport, asymptotic_consistency, convergence_order, energy_w0,
                          energy_w1)
from .engine import (assemble_jacobian, assemble_residual, correction_step, simulate, step,
                     stencil_eval)
from .planar import PlanarModel, equations_planar, split_matrices
from .solver import NonConvergence, SingularMatrix, SolverConfig, StepStats
from .spatial import SpatialModel, embed_planar, quat_to_rotation, residual_3d
from .types import (BandedMatrix, GridSpec, Parameters, StateField, SystemKind, Variant, l2_norm,
                    perp, rotation2d)

__all__ = [
    "BandedMatrix", "ConsistencyReport", "GridSpec", "NonConvergence", "Parameters", "PlanarModel",
    "SingularMatrix", "SolverConfig", "SpatialModel", "StateField", "StepStats", "SystemKind",
    "Variant", "assemble_jacobian", "assemble_residual", "asymptotic_consistency",
    "convergence_order", "correction_step", "embed_planar", "energy_w0", "energy_w1",
    "equations_planar", "l2_norm", "perp", "quat_to_rotation", "residual_3d", "rotation2d",
    "simulate", "split_matrices", "step", "stencil_eval",
]
