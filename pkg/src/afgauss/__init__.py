"""Numerical study of almost-fuchsian minimal disks through the Gauss equation
Delta_h u = -1 + e^{2u} + e^{-2u} |phi|_h^2 on the Poincare disk."""

from .af_analysis import (
    Membership,
    Verdict,
    curvature_report,
    extrinsic_curvature,
    intrinsic_curvature,
    membership,
    quasicircle_bound,
)
from .errors import (
    AFGaussError,
    ContinuationStalled,
    DriftExceeded,
    LinearSolveFailure,
    LineSearchStalled,
    MaxItersExceeded,
    MonotonicityViolated,
    NonCoercive,
    NotAlmostFuchsian,
    RimNormTooLarge,
)
from .gauss_solver import (
    Method,
    SolveParams,
    SolveResult,
    continuation_solve,
    monotone_solve,
    newton_solve,
    solve,
)
from .hyperbolic_disk import DiskGrid, ScalarField, build_grid
from .quad_diff import QuadDiff, c0_norm

__version__ = "0.1.0"

__all__ = [
    "AFGaussError",
    "ContinuationStalled",
    "DiskGrid",
    "DriftExceeded",
    "LineSearchStalled",
    "LinearSolveFailure",
    "MaxItersExceeded",
    "Membership",
    "Method",
    "MonotonicityViolated",
    "NonCoercive",
    "NotAlmostFuchsian",
    "QuadDiff",
    "RimNormTooLarge",
    "ScalarField",
    "SolveParams",
    "SolveResult",
    "Verdict",
    "build_grid",
    "c0_norm",
    "continuation_solve",
    "curvature_report",
    "extrinsic_curvature",
    "intrinsic_curvature",
    "membership",
    "monotone_solve",
    "newton_solve",
    "quasicircle_bound",
    "solve",
]
