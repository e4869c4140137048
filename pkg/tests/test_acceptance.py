"""End-to-end acceptance gate on the desk-scale grid (96 x 192, rho_max 8).

Each test prints one PASS/FAIL line; the full list is repeated in the
terminal summary. Expect roughly 15-20 minutes single-threaded.
"""

import numpy as np
import pytest

from afgauss.af_analysis import (
    curvature_report,
    extrinsic_curvature,
    intrinsic_curvature,
    quasicircle_bound,
    shape_norm_field,
)
from afgauss.convexity_lab import ball_bounds_probe, concavity_sweep, segment_convexity_probe
from afgauss.gauss_solver import (
    SolveParams,
    linearize,
    monotone_solve,
    newton_solve,
    refinement_error,
    residual,
    solve,
)
from afgauss.hyperbolic_disk import DiskGrid, ScalarField, laplacian_h
from afgauss.immersion import (
    holonomy_defect,
    hopf_roundtrip_error,
    induced_metric_error,
    integrate_frame,
    normal_flow_metric,
)
from afgauss.oracles import radial_oracle
from afgauss.quad_diff import QuadDiff, random_at_norm

from conftest import convergence_order, record_criterion

GRID = DiskGrid(96, 192, 8.0)
PARAMS = SolveParams()
ZERO = QuadDiff.zero()


@pytest.fixture(scope="module")
def box_instances():
    """Fifty seeded differentials at C0 norm 0.45 with their solves and refinement slack."""
    rng = np.random.default_rng(3)
    out = []
    for _ in range(50):
        phi = random_at_norm(rng, GRID, 0.45, 6)
        eps, coarse, _ = refinement_error(phi, GRID, PARAMS)
        out.append((phi, coarse, eps))
    return out


@pytest.fixture(scope="module")
def concavity_records():
    return concavity_sweep(100, seed=5, grid=GRID, params=PARAMS, n_t=17,
                           norm_range=(0.05, 0.45), max_degree=4)


def test_c01_fuchsian_exactness():
    res = solve(ZERO, GRID, PARAMS)
    rep = curvature_report(res, ZERO)
    sup_u = float(np.max(np.abs(res.u.values)))
    ok = (sup_u <= 1e-9 and np.all(rep.kappa_ext.values == 0)
          and np.all(rep.kappa_int.values == -1) and rep.K_bound == 1.0)
    assert record_criterion(1, "fuchsian exactness", ok,
                            f"|u|_sup={sup_u:.1e}, K_bound={rep.K_bound}")


def test_c02_radial_oracle():
    fine = DiskGrid(192, 192, 8.0)
    errs, errs_96 = {}, {}
    for c in (0.8, 1.6, 2.4):
        oracle = radial_oracle(c, n_points=4096)
        u = solve(QuadDiff((c,)), fine, PARAMS).u
        errs[c] = float(np.max(np.abs(u.values - oracle(fine.rho))))
        u96 = solve(QuadDiff((c,)), GRID, PARAMS).u
        errs_96[c] = float(np.max(np.abs(u96.values - oracle(GRID.rho))))
    orders = {c: np.log2(errs_96[c] / errs[c]) for c in errs}
    ok = max(errs.values()) <= 1e-4 and min(orders.values()) >= 1.8
    detail = ", ".join(f"c={c}: {errs[c]:.2e} (96-grid {errs_96[c]:.2e}, order {orders[c]:.2f})"
                       for c in errs)
    assert record_criterion(2, "radial oracle at n_rho=192", ok, detail)


def test_c03_a_priori_box(box_instances):
    violations, slack = 0, np.inf
    for phi, res, eps in box_instances:
        if not res.converged:
            violations += 1
            continue
        lo = -0.5 * np.log(2) - 5 * eps
        hi = 5 * eps
        u = res.u.values
        violations += int(np.any(u < lo) or np.any(u > hi))
        slack = min(slack, hi - float(u.max()), float(u.min()) - lo)
    eps_max = max(e for _, _, e in box_instances)
    assert record_criterion(3, "a priori box", violations == 0,
                            f"{violations}/50 violations, max eps_disc={eps_max:.2e}, "
                            f"min distance to box edge={slack:.2e}")


def test_c04_ball_bounds():
    parts, total = [], 0
    for lam in (0.25, 0.5, 1.0):
        res = ball_bounds_probe(lam, 50, seed=int(100 * lam), grid=GRID, params=PARAMS)
        total += res["counterexamples"]
        parts.append(f"lam={lam}: {res['inner_in_u']}/50 InU, {res['outer_not_in_u']}/50 NotInU")
    assert record_criterion(4, "ball bounds", total == 0, "; ".join(parts))


def test_c05_concavity(concavity_records):
    bad = [r["index"] for r in concavity_records if not r["verdict"]]
    partial = sum(r["partial"] for r in concavity_records)
    done = [r for r in concavity_records if not r["partial"]]
    worst = max((r["max_second_difference"] - r["tol"] for r in done), default=np.nan)
    mid = max((r["midpoint_violation"] - r["tol"] for r in done), default=np.nan)
    ok = not bad and len(done) == 100
    assert record_criterion(5, "concavity", ok,
                            f"{len(bad)} failing of 100 ({partial} partial), "
                            f"max(d2 - tol)={worst:.2e}, max(midpoint gap - tol)={mid:.2e}")


def test_c06_differential_inequality(concavity_records):
    done = [r for r in concavity_records if not r["partial"]]
    over = [r["index"] for r in done if r["max_ueq_violation"] > r["tol"]]
    worst = max((r["max_ueq_violation"] for r in done), default=np.nan)
    ok = not over and len(done) == 100
    assert record_criterion(6, "u inequality", ok,
                            f"{len(over)} scans above tol, max sup(u'' + 4u'^2)={worst:.2e}")


def test_c07_segment_convexity():
    parts, total = [], 0
    for lam in (0.5, 1.0):
        res = segment_convexity_probe(lam, 25, seed=int(10 * lam) + 70, grid=GRID, params=PARAMS)
        total += res["violations"]
        parts.append(f"lam={lam}: {res['violations']} violations, max shape_sup {res['max_shape_sup']:.3f}")
    assert record_criterion(7, "segment convexity", total == 0, "; ".join(parts))


def test_c08_monotonicity():
    rng = np.random.default_rng(8)
    violations, worst = 0, np.inf
    for _ in range(25):
        phi = random_at_norm(rng, GRID, rng.uniform(0.05, 0.55), 6)
        s = float(rng.uniform(0.05, 0.95))
        eps1, r1, _ = refinement_error(phi, GRID, PARAMS)
        eps2, rs, _ = refinement_error(phi.scaled(s), GRID, PARAMS)
        gap = float(np.min(rs.u.values - r1.u.values))
        slack = 5 * max(eps1, eps2)
        violations += int(gap < -slack)
        worst = min(worst, gap + slack)
    assert record_criterion(8, "monotonicity", violations == 0,
                            f"{violations}/25 violations, min(u_s - u + slack)={worst:.2e}")


def test_c09_uniqueness():
    rng = np.random.default_rng(9)
    diffs = []
    for _ in range(25):
        phi = random_at_norm(rng, GRID, 0.4, 6)
        a = monotone_solve(phi, GRID, PARAMS)
        b = newton_solve(phi, GRID, PARAMS)
        diffs.append(float(np.max(np.abs(a.u.values - b.u.values))))
    assert record_criterion(9, "monotone/Newton agreement", max(diffs) <= 1e-7,
                            f"max |u_mono - u_newton| = {max(diffs):.2e}")


def test_c10_linearization():
    rng = np.random.default_rng(10)
    orders = []
    for _ in range(10):
        phi = random_at_norm(rng, GRID, rng.uniform(0.1, 0.45), 6)
        a, k, m = rng.uniform(-0.3, 0.3), rng.uniform(-1, 1), int(rng.integers(1, 4))
        u = ScalarField.from_function(
            GRID, lambda r, t: a * np.cosh(r / 2) ** -2 * (1 + k * np.cos(t)))
        v = ScalarField.from_function(
            GRID, lambda r, t: np.cos(m * t + k) * np.tanh(r) ** m * np.exp(-r / 4))
        base = residual(u, phi).values
        lin = laplacian_h(v).values - linearize(u, phi).values * v.values
        errs = []
        for step in (1e-4, 1e-5):
            fd = (residual(ScalarField(GRID, u.values + step * v.values), phi).values - base) / step
            errs.append(np.max(np.abs((fd - lin)[GRID.interior_mask])))
        orders.append(float(np.log10(errs[0] / errs[1])))
    assert record_criterion(10, "linearization", min(orders) >= 0.9,
                            f"min measured order {min(orders):.3f} over 10 triples")


def test_c11_frame_reconstruction():
    plane = integrate_frame(ScalarField.constant(GRID, 0.0), ZERO)
    exact = np.stack([np.sinh(GRID.rho) * np.cos(GRID.theta), np.sinh(GRID.rho) * np.sin(GRID.theta),
                      0 * GRID.rho, np.cosh(GRID.rho)], axis=1)
    plane_err = float(np.max(np.abs(plane.X - exact)))
    phi = QuadDiff((1.6,))
    rows = []
    for n in (48, 96, 192):
        g = DiskGrid(n, 2 * n, 8.0)
        fr = integrate_frame(solve(phi, g, PARAMS).u, phi)
        rows.append((induced_metric_error(fr), hopf_roundtrip_error(fr), holonomy_defect(fr)))
    orders = convergence_order(np.array(rows)[:, 0]), convergence_order(np.array(rows)[:, 1]), \
        convergence_order(np.array(rows)[:, 2])
    min_order = min(float(np.min(o)) for o in orders)
    ok = plane_err <= 1e-6 and min_order >= 1.8
    assert record_criterion(11, "frame reconstruction", ok,
                            f"plane error {plane_err:.1e}; orders metric {np.round(orders[0], 2)}, "
                            f"hopf {np.round(orders[1], 2)}, holonomy {np.round(orders[2], 2)}")


def test_c12_normal_flow(box_instances):
    ts = np.round(np.arange(-5.0, 5.0 + 1e-9, 0.1), 10)
    n_checked, failures = 0, 0
    for phi, res, _ in box_instances:
        if not (res.converged and res.shape_sup < 1):
            continue
        n_checked += 1
        for t in ts:
            m = normal_flow_metric(res.u, phi, t)
            tr = m[:, 0, 0] + m[:, 1, 1]
            det = np.linalg.det(m)
            if not (np.all(tr > 0) and np.all(det > 0)):
                failures += 1
                break
    u0 = ScalarField.constant(GRID, 0.0)
    g0 = normal_flow_metric(u0, ZERO, 0.0)
    scale = np.abs(g0).max(axis=(1, 2))[:, None, None]
    fuchs = max(float(np.max(np.abs(normal_flow_metric(u0, ZERO, t) - np.cosh(t) ** 2 * g0) / scale))
                for t in ts)
    ok = failures == 0 and n_checked == len(box_instances) and fuchs <= 1e-9
    assert record_criterion(12, "normal flow", ok,
                            f"{n_checked - failures}/{n_checked} instances positive definite on "
                            f"[-5,5]; fuchsian relative error {fuchs:.1e}")


def test_c13_quasicircle_bound():
    cs = np.linspace(0.0, 2.8, 15)
    sups, Ks, identity = [], [], True
    for c in cs:
        phi = QuadDiff((c,))
        res = solve(phi, GRID, PARAMS)
        s = shape_norm_field(res.u, phi).values
        K = quasicircle_bound(res.u, phi)
        identity &= K == float(np.max((1 + s) / (1 - s)))
        identity &= np.array_equal(extrinsic_curvature(res.u, phi).values, -(s**2))
        identity &= np.array_equal(intrinsic_curvature(res.u, phi).values,
                                   extrinsic_curvature(res.u, phi).values - 1)
        sups.append(res.shape_sup)
        Ks.append(K)
    monotone = bool(np.all(np.diff(Ks) > 0) and np.all(np.diff(sups) > 0))
    assert record_criterion(13, "quasicircle bound", bool(identity) and monotone,
                            f"identity exact={bool(identity)}, K from {Ks[0]:.3f} to {Ks[-1]:.3f} "
                            f"monotone={monotone}")
