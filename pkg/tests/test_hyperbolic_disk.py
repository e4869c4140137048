import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afgauss.errors import LinearSolveFailure, NonCoercive
from afgauss.hyperbolic_disk import (
    DiskGrid,
    HelmholtzOperator,
    ScalarField,
    build_grid,
    helmholtz_solve,
    laplacian_h,
    read_field_csv,
    sup_norm,
    write_field_csv,
)

from conftest import convergence_order


def test_node_count():
    assert build_grid(8, 8, 5.0).n_nodes == 65


def test_rim_radius():
    g = build_grid(64, 128, 8.0)
    assert np.max(np.abs(g.z)) == pytest.approx(np.tanh(4.0), rel=1e-15)
    assert np.tanh(4.0) == pytest.approx(0.999329, abs=1e-6)


@pytest.mark.parametrize("args", [(8, 7, 5.0), (7, 8, 5.0), (8, 8, 0.0), (8, 8, -1.0), (0, 8, 1.0)])
def test_rejects_bad_grids(args):
    with pytest.raises(ValueError):
        build_grid(*args)


def test_node_layout():
    g = DiskGrid(8, 12, 4.0)
    assert g.rho[0] == 0 and g.theta[0] == 0
    assert g.index(1, 0) == 1
    assert g.index(8, 11) == g.n_nodes - 1
    i, j = 3, 5
    k = g.index(i, j)
    assert g.rho[k] == pytest.approx(i * 0.5)
    assert g.theta[k] == pytest.approx(2 * np.pi * j / 12)
    assert np.all(np.abs(g.z) < 1)
    assert g.rim.start == g.index(8, 0)


def test_scalar_field_rejects_nonfinite():
    g = DiskGrid(8, 8, 2.0)
    v = np.zeros(g.n_nodes)
    v[3] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, v)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros(g.n_nodes + 1))


def test_laplacian_of_constant_is_zero(small_grid):
    lap = laplacian_h(ScalarField.constant(small_grid, 3.7))
    assert np.max(np.abs(lap.values)) < 1e-12


def _lap_error(n, fn, exact, rho_min=0.0):
    g = DiskGrid(n, 2 * n, 4.0)
    u = ScalarField.from_function(g, fn)
    err = laplacian_h(u).values - exact(g.rho, g.theta)
    keep = g.interior_mask & (g.rho >= rho_min)
    return np.max(np.abs(err[keep]))


def test_laplacian_log_cosh_second_order():
    errs = [_lap_error(n, lambda r, t: np.log(np.cosh(r)), lambda r, t: 1 + np.cosh(r) ** -2)
            for n in (16, 32, 64)]
    assert np.all(convergence_order(errs) >= 1.8)


def test_laplacian_rho_squared():
    def exact(r, t):
        out = np.full_like(r, 4.0)  # center: 2 + 2 * lim rho coth rho
        nz = r > 0
        out[nz] = 2 + 2 * r[nz] / np.tanh(r[nz])
        return out

    # centered differences are exact on quadratics in rho
    for n in (16, 32):
        assert _lap_error(n, lambda r, t: r**2, exact) < 1e-10


def test_laplacian_angular_mode():
    # Re z is h-harmonic. The first ring sees an O(d_theta^2 / d_rho^2 * rho) angular
    # error, so the rate is measured on a fixed annulus.
    errs = [_lap_error(n, lambda r, t: np.tanh(r / 2) * np.cos(t), lambda r, t: 0 * r, 0.5)
            for n in (16, 32, 64)]
    assert np.all(convergence_order(errs) >= 1.8)


def test_helmholtz_constant_solution(small_grid):
    g = small_grid
    v = helmholtz_solve(ScalarField.constant(g, 2.0), ScalarField.constant(g, -2.0),
                        ScalarField.constant(g, 1.0))
    assert np.max(np.abs(v.values - 1)) < 1e-10


def test_helmholtz_manufactured_second_order():
    # w = exp(-rho^2/4) + Re(z^2); the second term is h-harmonic
    def w_fn(r, t):
        return np.exp(-r**2 / 4) + np.tanh(r / 2) ** 2 * np.cos(2 * t)

    def lap_radial(r):
        e = np.exp(-r**2 / 4)
        out = np.full_like(r, -1.0)  # center: 2 f''(0)
        nz = r > 0
        out[nz] = (-0.5 + r[nz] ** 2 / 4) * e[nz] - r[nz] / 2 * e[nz] / np.tanh(r[nz])
        return out

    errs = []
    for n in (16, 32, 64):
        g = DiskGrid(n, 2 * n, 4.0)
        w = w_fn(g.rho, g.theta)
        rhs = lap_radial(g.rho) - 2 * w
        v = helmholtz_solve(2.0, rhs, w, grid=g)
        errs.append(np.max(np.abs(v.values - w)))
    assert np.all(convergence_order(errs) >= 1.8)


def test_helmholtz_reproduces_rhs(small_grid, rng):
    g = small_grid
    c = 1 + rng.random(g.n_nodes)
    rhs = rng.standard_normal(g.n_nodes)
    bnd = rng.standard_normal(g.n_nodes)
    op = HelmholtzOperator(g, c)
    v = op.solve(rhs, bnd)
    back = op.apply(v).values
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(back - rhs)[g.interior_mask]) <= 1e-9 * scale
    assert np.array_equal(v.rim_values, bnd[g.rim])


def test_helmholtz_noncoercive(small_grid):
    c = np.full(small_grid.n_nodes, 2.0)
    c[5] = 0.0
    with pytest.raises(NonCoercive):
        helmholtz_solve(c, 0.0, 0.0, grid=small_grid)


def test_helmholtz_failure_is_signalled(small_grid, monkeypatch):
    import afgauss.hyperbolic_disk as hd
    monkeypatch.setattr(hd, "LINEAR_RTOL", 0.0)
    with pytest.raises(LinearSolveFailure):
        helmholtz_solve(2.0, np.random.default_rng(0).standard_normal(small_grid.n_nodes), 0.0,
                        grid=small_grid)


@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(0.0, 2.0))
def test_discrete_maximum_principle(seed, shift):
    g = DiskGrid(12, 16, 5.0)
    r = np.random.default_rng(seed)
    c = 0.1 + 3 * r.random(g.n_nodes)
    rhs = -r.random(g.n_nodes)
    bnd = r.random(g.n_nodes) - shift
    v = helmholtz_solve(c, rhs, bnd, grid=g)
    floor = min(0.0, bnd[g.rim].min())
    assert v.values.min() >= floor - 1e-12


def test_sup_norm_examples():
    g = DiskGrid(8, 8, 3.0)
    assert sup_norm(ScalarField.constant(g, 0.0)) == 0
    v = np.zeros(g.n_nodes)
    v[10] = -3
    assert sup_norm(ScalarField(g, v)) == 3
    f = ScalarField.from_function(g, lambda r, t: np.cosh(r / 2) ** -4 / 4)
    assert sup_norm(f) == pytest.approx(0.25, abs=1e-15)


def test_csv_roundtrip(tmp_path, rng):
    g = DiskGrid(8, 10, 6.5)
    u = ScalarField(g, rng.standard_normal(g.n_nodes))
    path = tmp_path / "u.csv"
    write_field_csv(u, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "rho,theta,value"
    assert lines[1].startswith("0,0,")
    assert len(lines) == g.n_nodes + 1
    back = read_field_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, u.values)
