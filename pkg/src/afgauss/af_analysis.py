"""Geometry of a solved pair (u, phi): curvatures, membership, quasicircle bound."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import AFGaussError, ContinuationStalled, NotAlmostFuchsian
from .gauss_solver import Method, SolveParams, SolveResult, solve, source_values
from .hyperbolic_disk import DiskGrid, ScalarField
from .quad_diff import c0_norm

MEMBERSHIP_MARGIN = 1e-6


class Verdict(str, enum.Enum):
    IN_U = "InU"
    NOT_IN_U = "NotInU"
    UNRESOLVED = "Unresolved"


@dataclass
class Membership:
    verdict: Verdict
    lam: float
    c0_norm: float
    shape_sup: float | None = None
    s_star: float | None = None
    result: SolveResult | None = None

    def __bool__(self):
        return self.verdict is Verdict.IN_U


def shape_norm_field(u: ScalarField, phi) -> ScalarField:
    """Pointwise e^{-2u} |phi|_h, the operator norm of the shape operator."""
    f = source_values(phi, u.grid)
    return ScalarField(u.grid, np.exp(-2 * u.values) * np.sqrt(f))


def extrinsic_curvature(u: ScalarField, phi) -> ScalarField:
    """det A = -(e^{-2u} |phi|_h)^2."""
    s = shape_norm_field(u, phi).values
    return ScalarField(u.grid, -(s**2))


def intrinsic_curvature(u: ScalarField, phi) -> ScalarField:
    """Gauss equation: kappa = det A - 1."""
    return ScalarField(u.grid, extrinsic_curvature(u, phi).values - 1.0)


def quasicircle_bound(u: ScalarField, phi) -> float:
    """Upper bound sup (1 + s)/(1 - s) on the boundary-curve dilatation."""
    s = shape_norm_field(u, phi).values
    smax = float(s.max())
    if smax >= 1:
        raise NotAlmostFuchsian(f"shape_sup = {smax:.6g} >= 1")
    return float(np.max((1 + s) / (1 - s)))


@dataclass
class CurvatureReport:
    kappa_ext: ScalarField
    kappa_int: ScalarField
    shape_sup: float
    K_bound: float | None
    membership: Verdict

    def summary(self) -> dict:
        return {
            "shape_sup": self.shape_sup,
            "K_bound": self.K_bound,
            "membership": self.membership.value,
            "kappa_ext_min": float(self.kappa_ext.values.min()),
            "kappa_int_min": float(self.kappa_int.values.min()),
        }


def curvature_report(result: SolveResult, phi, lam: float = 1.0) -> CurvatureReport:
    u = result.u
    s = shape_norm_field(u, phi)
    sup = float(s.values.max())
    K = quasicircle_bound(u, phi) if sup < 1 else None
    if result.converged and sup < lam - MEMBERSHIP_MARGIN:
        verdict = Verdict.IN_U
    elif c0_norm_of(phi, u.grid) >= lam:
        verdict = Verdict.NOT_IN_U
    else:
        verdict = Verdict.UNRESOLVED
    return CurvatureReport(
        kappa_ext=extrinsic_curvature(u, phi),
        kappa_int=intrinsic_curvature(u, phi),
        shape_sup=sup,
        K_bound=K,
        membership=verdict,
    )


def c0_norm_of(phi, grid: DiskGrid) -> float:
    if isinstance(phi, ScalarField):
        return float(np.sqrt(np.max(phi.values)))
    return c0_norm(phi, grid)


def membership(phi, lam: float, grid: DiskGrid, params: SolveParams = SolveParams(),
               margin: float = MEMBERSHIP_MARGIN, u_init: ScalarField | None = None) -> Membership:
    """Classify phi against U_lambda.

    NotInU without solving when the C0 norm is already >= lambda; InU when a
    solve converges with shape_sup < lambda - margin; Unresolved otherwise.
    """
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    c0 = c0_norm_of(phi, grid)
    if c0 >= lam:
        return Membership(Verdict.NOT_IN_U, lam, c0)
    s_star = None
    try:
        res = solve(phi, grid, params, u_init)
    except ContinuationStalled as exc:
        return Membership(Verdict.UNRESOLVED, lam, c0, s_star=exc.s_star, result=exc.result)
    except AFGaussError:
        if params.method is Method.AUTO:
            return Membership(Verdict.UNRESOLVED, lam, c0)
        try:
            res = solve(phi, grid, SolveParams(**{**params.__dict__, "method": Method.AUTO}))
        except ContinuationStalled as exc:
            return Membership(Verdict.UNRESOLVED, lam, c0, s_star=exc.s_star, result=exc.result)
        except AFGaussError:
            return Membership(Verdict.UNRESOLVED, lam, c0)
    if res.converged and res.shape_sup < lam - margin:
        return Membership(Verdict.IN_U, lam, c0, res.shape_sup, s_star, res)
    return Membership(Verdict.UNRESOLVED, lam, c0, res.shape_sup, s_star, res)
