"""Falsification experiments for concavity of the extrinsic curvature along
segments of Hopf differentials and for the ball / convexity properties of U_lambda.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import write_json
from .af_analysis import MEMBERSHIP_MARGIN, Verdict, extrinsic_curvature, membership
from .errors import AFGaussError
from .gauss_solver import (
    SolveParams,
    algebraic_balance,
    linearize,
    newton_solve,
    refinement_error,
    solve,
    source_values,
)
from .hyperbolic_disk import DiskGrid, HelmholtzOperator, ScalarField, write_field_csv
from .quad_diff import QuadDiff, combine, pairing_field, random_at_norm

log = logging.getLogger(__name__)


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("AFGAUSS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SegmentScan:
    phi0: QuadDiff
    phi1: QuadDiff
    grid: DiskGrid
    ts: np.ndarray
    results: list = field(default_factory=list)
    kappa: list = field(default_factory=list)
    partial: bool = False
    failed_t: float | None = None
    eps_disc: float | None = None

    @property
    def n_t(self) -> int:
        return len(self.ts)

    @property
    def dt(self) -> float:
        return float(self.ts[1] - self.ts[0])

    def phi_at(self, t: float) -> QuadDiff:
        return combine(1 - t, self.phi0, t, self.phi1)

    def u_stack(self) -> np.ndarray:
        return np.array([r.u.values for r in self.results])

    def kappa_stack(self) -> np.ndarray:
        return np.array([k.values for k in self.kappa])

    def _require_complete(self):
        if self.partial or len(self.results) != self.n_t:
            raise ValueError(f"scan is partial (failed at t={self.failed_t})")


def segment_scan(phi0: QuadDiff, phi1: QuadDiff, n_t: int, grid: DiskGrid,
                 params: SolveParams = SolveParams(), parallel: bool = False,
                 check_endpoints: bool = True) -> SegmentScan:
    """Solve along phi_t = (1-t) phi0 + t phi1 at n_t uniform values of t.

    Sequential mode warm-starts each Newton solve from a secant prediction
    of the two previous solutions; parallel mode cold-starts every t.
    """
    if n_t < 3 or n_t % 2 == 0:
        raise ValueError(f"n_t must be odd and >= 3, got {n_t}")
    ts = np.linspace(0.0, 1.0, n_t)
    scan = SegmentScan(phi0, phi1, grid, ts)

    if check_endpoints:
        for name, phi in (("phi0", phi0), ("phi1", phi1)):
            m = membership(phi, 1.0, grid, params)
            if m.verdict is not Verdict.IN_U:
                raise ValueError(f"{name} is not verified in U_1 ({m.verdict.value})")

    def cold(t):
        return solve(scan.phi_at(t), grid, params)

    if parallel:
        with ThreadPoolExecutor(max_workers()) as pool:
            futures = [pool.submit(cold, t) for t in ts]
            outcomes = []
            for fut in futures:
                try:
                    outcomes.append(fut.result())
                except AFGaussError as exc:
                    outcomes.append(exc)
    else:
        outcomes = []
        for k, t in enumerate(ts):
            phi_t = scan.phi_at(t)
            try:
                if k == 0:
                    res = cold(t)
                else:
                    prev = outcomes[-1].u.values
                    guess = 2 * prev - outcomes[-2].u.values if k >= 2 else prev
                    try:
                        res = newton_solve(phi_t, grid, params, ScalarField(grid, guess))
                    except AFGaussError:
                        res = cold(t)
            except AFGaussError as exc:
                outcomes.append(exc)
                break
            outcomes.append(res)

    for t, res in zip(ts, outcomes):
        if isinstance(res, Exception) or not (res.converged and res.shape_sup < 1):
            scan.partial, scan.failed_t = True, float(t)
            log.info("scan failed at t=%.4g: %s", t, res if isinstance(res, Exception) else res.shape_sup)
            break
        scan.results.append(res)
        scan.kappa.append(extrinsic_curvature(res.u, scan.phi_at(t)))
    return scan


def scan_refinement_error(scan: SegmentScan, params: SolveParams = SolveParams()) -> float:
    """Discretization slack for a scan: worst one-refinement error over both endpoints."""
    eps = 0.0
    for k, phi in ((0, scan.phi0), (-1, scan.phi1)):
        e, _, _ = refinement_error(phi, scan.grid, params, coarse=scan.results[k])
        eps = max(eps, e)
    scan.eps_disc = eps
    return eps


def default_tolerance(scan: SegmentScan) -> float:
    kmax = float(np.max(np.abs(scan.kappa_stack()))) if scan.kappa else 0.0
    return 1e-6 * (1 + kmax) + 10 * (scan.eps_disc or 0.0)


@dataclass
class ConvexityReport:
    max_second_difference: float
    max_ueq_violation: float
    first_variation_error: float
    midpoint_violation: float
    tol: float
    verdict: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def kappa_second_differences(scan: SegmentScan) -> np.ndarray:
    k = scan.kappa_stack()
    return (k[:-2] - 2 * k[1:-1] + k[2:]) / scan.dt**2


def u_inequality_field(scan: SegmentScan) -> np.ndarray:
    """ddot(u) + 4 dot(u)^2 by centered differences at interior t, per node."""
    u = scan.u_stack()
    h = scan.dt
    ud = (u[2:] - u[:-2]) / (2 * h)
    udd = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    return udd + 4 * ud**2


def u_inequality_check(scan: SegmentScan, tol: float | None = None) -> float:
    """Sup over interior t and nodes of ddot(u) + 4 dot(u)^2 (expected <= tol)."""
    scan._require_complete()
    return float(np.max(u_inequality_field(scan)))


def midpoint_violation(scan: SegmentScan) -> float:
    """max over nodes of (kappa_0 + kappa_1)/2 - kappa_{1/2}; concavity makes it <= 0."""
    k = scan.kappa_stack()
    mid = (scan.n_t - 1) // 2
    return float(np.max(0.5 * (k[0] + k[-1]) - k[mid]))


def first_variation(scan: SegmentScan, t_index: int) -> ScalarField:
    """dot(u)_t from the linearized equation (Delta^h - c) v = 2 e^{-2u} <phi_t, phi1 - phi0>_h."""
    g = scan.grid
    t = scan.ts[t_index]
    u = scan.results[t_index].u
    phi_t = scan.phi_at(t)
    dphi = scan.phi1 - scan.phi0
    pair = pairing_field(phi_t, dphi, g).values
    rhs = 2 * np.exp(-2 * u.values) * pair
    # rim: derivative of the algebraic balance, du/dt = -df/dt / (2w (2w - 1))
    f_rim = source_values(phi_t, g)[g.rim]
    w = np.exp(2 * algebraic_balance(f_rim))
    bnd = np.zeros(g.n_nodes)
    bnd[g.rim] = -2 * pair[g.rim] / (2 * w * (2 * w - 1))
    return HelmholtzOperator(g, linearize(u, phi_t)).solve(rhs, bnd)


def first_variation_check(scan: SegmentScan, t_index: int) -> float:
    """Sup-norm gap between the linearized-PDE dot(u) and the centered t-difference of u."""
    scan._require_complete()
    if not 0 < t_index < scan.n_t - 1:
        raise ValueError("t_index must be interior")
    ud = first_variation(scan, t_index).values
    u = scan.u_stack()
    fd = (u[t_index + 1] - u[t_index - 1]) / (2 * scan.dt)
    return float(np.max(np.abs(ud - fd)))


def ordering_violation(scan: SegmentScan) -> float:
    """max over t, nodes of e^{-4u_t}|phi_t|^2 - max(endpoint values)."""
    scan._require_complete()
    vals = []
    for t, r in zip(scan.ts, scan.results):
        f = source_values(scan.phi_at(t), scan.grid)
        vals.append(np.exp(-4 * r.u.values) * f)
    vals = np.array(vals)
    return float(np.max(vals - np.maximum(vals[0], vals[-1])))


def concavity_check(scan: SegmentScan, tol: float | None = None) -> ConvexityReport:
    scan._require_complete()
    tol = default_tolerance(scan) if tol is None else tol
    d2 = float(np.max(kappa_second_differences(scan)))
    ueq = u_inequality_check(scan)
    fv = first_variation_check(scan, (scan.n_t - 1) // 2)
    mid = midpoint_violation(scan)
    return ConvexityReport(
        max_second_difference=d2,
        max_ueq_violation=ueq,
        first_variation_error=fv,
        midpoint_violation=mid,
        tol=tol,
        verdict=bool(d2 <= tol and ueq <= tol and mid <= tol),
    )


# ---- probes ----------------------------------------------------------

def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def ball_bounds_probe(lam: float, n_samples: int, seed: int, grid: DiskGrid,
                      params: SolveParams = SolveParams(), max_degree: int = 6,
                      inner_factor: float = 0.98) -> dict:
    """Sample differentials on the spheres of radius inner_factor*lam/(1+lam^2)
    (expected InU(lam)) and lam (expected NotInU(lam)); count counterexamples."""
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    r_in = inner_factor * lam / (1 + lam**2)
    r_out = lam
    inner = [random_at_norm(rng, grid, r_in, max_degree) for _ in range(n_samples)]
    outer = [random_at_norm(rng, grid, r_out, max_degree) for _ in range(n_samples)]
    workers = max_workers()
    v_in = _map(lambda p: membership(p, lam, grid, params), inner, workers)
    v_out = _map(lambda p: membership(p, lam, grid, params), outer, workers)
    bad_in = [i for i, m in enumerate(v_in) if m.verdict is not Verdict.IN_U]
    bad_out = [i for i, m in enumerate(v_out) if m.verdict is not Verdict.NOT_IN_U]
    return {
        "lambda": lam,
        "seed": seed,
        "n_samples": n_samples,
        "inner_radius": r_in,
        "outer_radius": r_out,
        "inner_in_u": n_samples - len(bad_in),
        "outer_not_in_u": n_samples - len(bad_out),
        "inner_max_shape_sup": max((m.shape_sup for m in v_in if m.shape_sup is not None), default=None),
        "counterexamples": len(bad_in) + len(bad_out),
        "counterexample_indices": {"inner": bad_in, "outer": bad_out},
    }


def segment_convexity_probe(lam: float, n_pairs: int, seed: int, grid: DiskGrid,
                            params: SolveParams = SolveParams(), n_t: int = 9,
                            norm_range=(0.5, 1.15), max_degree: int = 6,
                            max_attempts: int = 20) -> dict:
    """For random endpoint pairs verified in U_lambda, check every scanned
    interior point of the segment is also in U_lambda.

    Endpoint C0 norms are drawn from ``norm_range`` times lam/(1+lam^2), capped
    just below lam, so part of the sample lies beyond the guaranteed ball.
    """
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    base = lam / (1 + lam**2)
    lo, hi = norm_range[0] * base, min(norm_range[1] * base, 0.99 * lam)

    def endpoint():
        for _ in range(max_attempts):
            phi = random_at_norm(rng, grid, rng.uniform(lo, hi), max_degree)
            m = membership(phi, lam, grid, params)
            if m.verdict is Verdict.IN_U:
                return phi
        raise RuntimeError("could not draw an endpoint verified in U_lambda")

    pairs = [(endpoint(), endpoint()) for _ in range(n_pairs)]

    def check(pair):
        scan = segment_scan(pair[0], pair[1], n_t, grid, params, check_endpoints=False)
        n_bad = 0
        if scan.partial:
            n_bad += int(np.count_nonzero(scan.ts[1:-1] >= scan.failed_t))
        for r in scan.results[1:-1]:
            if not r.shape_sup < lam - MEMBERSHIP_MARGIN:
                n_bad += 1
        worst = max((r.shape_sup for r in scan.results), default=None)
        return n_bad, worst

    outcomes = _map(check, pairs, max_workers())
    return {
        "lambda": lam,
        "seed": seed,
        "n_pairs": n_pairs,
        "n_t": n_t,
        "violations": int(sum(o[0] for o in outcomes)),
        "max_shape_sup": max((o[1] for o in outcomes if o[1] is not None), default=None),
        "endpoint_norm_range": [lo, hi],
    }


def random_endpoints(rng: np.random.Generator, grid: DiskGrid, norm_range=(0.05, 0.45),
                     max_degree: int = 4) -> tuple[QuadDiff, QuadDiff]:
    return tuple(random_at_norm(rng, grid, rng.uniform(*norm_range), max_degree) for _ in range(2))


def concavity_sweep(n_scans: int, seed: int, grid: DiskGrid, params: SolveParams = SolveParams(),
                    n_t: int = 17, norm_range=(0.05, 0.45), max_degree: int = 4,
                    refine: bool = True, on_scan=None) -> list[dict]:
    """Run ``n_scans`` random segment scans and their concavity checks.

    Scans are dropped after checking (they are large); ``on_scan(k, scan,
    report)`` sees each one first. Returns one record per scan.
    """
    rng = np.random.default_rng(seed)
    pairs = [random_endpoints(rng, grid, norm_range, max_degree) for _ in range(n_scans)]

    def run(item):
        k, (phi0, phi1) = item
        scan = segment_scan(phi0, phi1, n_t, grid, params, check_endpoints=False)
        record = {"index": k, "phi0": phi0.coeffs, "phi1": phi1.coeffs, "partial": scan.partial}
        if scan.partial:
            record.update(failed_t=scan.failed_t, verdict=False)
            return record
        if refine:
            scan_refinement_error(scan, params)
        report = concavity_check(scan)
        if on_scan is not None:
            on_scan(k, scan, report)
        record.update(report.to_dict(), eps_disc=scan.eps_disc,
                      shape_sup=max(r.shape_sup for r in scan.results))
        return record

    records = _map(run, list(enumerate(pairs)), max_workers())
    for r in records:
        r["phi0"] = [[c.real, c.imag] for c in r["phi0"]]
        r["phi1"] = [[c.real, c.imag] for c in r["phi1"]]
    return records


def star_monotonicity_gap(phi: QuadDiff, s: float, grid: DiskGrid,
                          params: SolveParams = SolveParams()):
    """min over nodes of u_{s phi} - u_phi (expected >= -slack for 0 <= s <= 1)."""
    r1 = solve(phi, grid, params)
    rs = solve(phi.scaled(s), grid, params)
    return float(np.min(rs.u.values - r1.u.values)), r1, rs


# ---- output ----------------------------------------------------------

def write_scan(scan: SegmentScan, out_dir, extra: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, (r, kap) in enumerate(zip(scan.results, scan.kappa)):
        write_field_csv(r.u, out / f"u_t{k:03d}.csv")
        write_field_csv(kap, out / f"kappa_t{k:03d}.csv")
    payload = {
        "t": scan.ts.tolist(),
        "phi0": json.loads(scan.phi0.to_json()),
        "phi1": json.loads(scan.phi1.to_json()),
        "partial": scan.partial,
        "failed_t": scan.failed_t,
        "eps_disc": scan.eps_disc,
        "shape_sup": [r.shape_sup for r in scan.results],
        "kappa_min": [float(k.values.min()) for k in scan.kappa],
    }
    if extra:
        payload.update(extra)
    return write_json(out / "scan.json", payload)
