import numpy as np
import pytest

from cstomo import fdfd
from cstomo.errors import ConfigurationError
from cstomo.fdfd import (
    C0,
    assemble_tm,
    incident_field_line_source,
    measure,
    measure_adjoint,
    receiver_operator,
    solve,
    solve_adjoint,
)
from cstomo.geometry import Cartesian2DGrid, subdomain_indices
from cstomo.mie import cylinder_scattered_field

FREQ = 0.3e9
OMEGA = 2 * np.pi * FREQ
LAM = C0 / FREQ


def small_grid(h=LAM / 30, half=1.0, pml=10):
    return Cartesian2DGrid.covering(-half, half, -half, half, h, pml_cells=pml)


def delta_source(grid, x, y):
    ix, iy = grid.cell_of(x, y)
    rhs = np.zeros(grid.n, dtype=complex)
    rhs[grid.flat_index(ix, iy)] = 1.0 / grid.cell_area
    cx = grid.x0 + ix * grid.dx
    cy = grid.y0 + iy * grid.dy
    return rhs, (cx, cy)


def test_solve_matches_analytic_green():
    g = small_grid()
    op = assemble_tm(g, OMEGA)
    rhs, src = delta_source(g, 0.0, 0.0)
    e = solve(op, rhs)
    ana = incident_field_line_source(g, OMEGA, src)
    x, y = g.centers()
    r = np.hypot(x - src[0], y - src[1])
    mask = (r >= 3 * g.dx) & np.asarray(g.in_interior(x, y, margin_cells=5))
    err = np.linalg.norm((e - ana)[mask]) / np.linalg.norm(ana[mask])
    assert err < 0.02


def test_solve_zero_source():
    g = small_grid(h=0.05, half=0.5)
    op = assemble_tm(g, OMEGA)
    assert np.all(solve(op, np.zeros(g.n, dtype=complex)) == 0)


def test_solve_round_trip_and_linearity():
    g = small_grid(h=0.05, half=0.5)
    op = assemble_tm(g, OMEGA)
    rng = np.random.default_rng(2)
    v = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    rhs = op.matrix @ v
    np.testing.assert_allclose(solve(op, rhs), v, rtol=0, atol=1e-10 * np.linalg.norm(v))

    s1 = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    s2 = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    a, b = 1.7 - 0.3j, -0.8 + 2.1j
    lhs = solve(op, a * s1 + b * s2)
    rhs2 = a * solve(op, s1) + b * solve(op, s2)
    assert np.linalg.norm(lhs - rhs2) / np.linalg.norm(rhs2) < 1e-12


def test_matrix_adjoint_identity():
    g = small_grid(h=0.05, half=0.5)
    op = assemble_tm(g, OMEGA)
    rng = np.random.default_rng(7)
    x = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    y = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    lhs = np.vdot(y, op.matrix @ x)
    rhs = np.vdot(op.matrix.conj().T @ y, x)
    assert abs(lhs - rhs) / abs(lhs) < 1e-12


def test_solve_adjoint_pairing():
    g = small_grid(h=0.05, half=0.5)
    op = assemble_tm(g, OMEGA)
    rng = np.random.default_rng(13)
    for _ in range(10):
        s = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        v = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        lhs = np.vdot(v, solve(op, s))          # <A^{-1}s, v> with <a,b>=sum a conj(b)
        rhs = np.vdot(solve_adjoint(op, v), s)
        assert abs(lhs - rhs) / abs(lhs) < 1e-12


def test_solve_adjoint_round_trip():
    g = small_grid(h=0.05, half=0.5)
    op = assemble_tm(g, OMEGA)
    rng = np.random.default_rng(17)
    w = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    v = op.matrix.conj().T @ w
    got = solve_adjoint(op, v)
    assert np.linalg.norm(got - w) / np.linalg.norm(w) < 1e-10


def test_no_pml_real_symmetric_case():
    g = Cartesian2DGrid(nx=24, ny=24, dx=0.05, dy=0.05, x0=0, y0=0, pml_cells=0)
    op = assemble_tm(g, OMEGA)
    assert abs(op.matrix.imag).max() == 0.0
    d = (op.matrix - op.matrix.T).tocoo()
    asym = abs(d.data).max() if d.nnz else 0.0
    assert asym == 0.0
    rng = np.random.default_rng(23)
    v = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    np.testing.assert_allclose(solve_adjoint(op, v), solve(op, v), rtol=1e-12)


def test_factorization_reuse_bit_identical():
    g = small_grid(h=0.05, half=0.5)
    op = assemble_tm(g, OMEGA)
    rng = np.random.default_rng(29)
    s = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    assert np.array_equal(solve(op, s), solve(op, s))


def test_assemble_rejects_bad_args():
    g = small_grid(h=0.05, half=0.5)
    with pytest.raises(ValueError):
        assemble_tm(g, 0.0)
    with pytest.raises(ValueError):
        assemble_tm(g, OMEGA, chi=np.zeros(3, dtype=complex))


def test_incident_field_asymptotic_decay():
    # Hankel asymptotics oracle: |field| ~ r^{-1/2}, so |E(r)| / |E(4r)| -> 2
    g = Cartesian2DGrid(nx=93, ny=9, dx=0.5, dy=0.5, x0=-23.0, y0=-2.0, pml_cells=2)
    e = incident_field_line_source(g, OMEGA, (0.0, 0.0))
    x, y = g.centers()
    k5 = np.argmin(np.hypot(x - 5.0, y))
    k20 = np.argmin(np.hypot(x - 20.0, y))
    assert (x[k5], y[k5]) == (5.0, 0.0) and (x[k20], y[k20]) == (20.0, 0.0)
    ratio = abs(e[k5]) / abs(e[k20])
    assert abs(ratio - 2.0) / 2.0 < 0.03


def test_incident_field_radial_symmetry():
    g = Cartesian2DGrid(nx=41, ny=41, dx=0.05, dy=0.05, x0=-1.0, y0=-1.0, pml_cells=5)
    src = (0.0, 0.0)  # a cell center
    e = incident_field_line_source(g, OMEGA, src)
    ix, iy = g.cell_of(*src)
    quad = [g.flat_index(ix + 7, iy), g.flat_index(ix - 7, iy),
            g.flat_index(ix, iy + 7), g.flat_index(ix, iy - 7)]
    mags = np.abs(e[quad])
    assert np.ptp(mags) <= 1e-12 * mags[0]


def test_incident_field_matches_numeric_green():
    g = small_grid()
    op = assemble_tm(g, OMEGA)
    rhs, src = delta_source(g, 0.1, -0.2)
    e = solve(op, rhs)
    ana = incident_field_line_source(g, OMEGA, src)
    x, y = g.centers()
    r = np.hypot(x - src[0], y - src[1])
    mask = (r >= 3 * g.dx) & np.asarray(g.in_interior(x, y, margin_cells=5))
    err = np.linalg.norm((e - ana)[mask]) / np.linalg.norm(ana[mask])
    assert err < 0.03


def test_receiver_rows_are_convex_weights():
    g = small_grid(h=0.05, half=0.5)
    rng = np.random.default_rng(31)
    pos = rng.uniform(-0.4, 0.4, size=(25, 2))
    rx = receiver_operator(g, pos)
    w = rx.weights
    assert w.shape == (25, g.n)
    counts = np.diff(w.indptr)
    assert np.all(counts <= 4)
    np.testing.assert_allclose(np.asarray(w.sum(axis=1)).ravel(), 1.0, rtol=1e-12)
    assert np.all(w.data >= 0)


def test_receiver_exact_on_cell_center():
    g = small_grid(h=0.05, half=0.5)
    rx = receiver_operator(g, np.array([[g.x0 + 15 * g.dx, g.y0 + 18 * g.dy]]))
    rng = np.random.default_rng(37)
    e = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    got = (rx.weights @ e)[0]
    assert got == pytest.approx(e[g.flat_index(15, 18)], rel=1e-14)


def test_receiver_rejects_pml_positions():
    g = small_grid(h=0.05, half=0.5)
    xmin, _, _, _ = g.interior_bounds()
    with pytest.raises(ConfigurationError):
        receiver_operator(g, np.array([[xmin - 3 * g.dx, 0.0]]))
    with pytest.raises(ConfigurationError):
        receiver_operator(g, np.array([[1e3, 0.0]]))


def test_measure_zero_and_homogeneity():
    g = small_grid(h=0.05, half=0.5)
    op = assemble_tm(g, OMEGA)
    d = subdomain_indices(g, -0.2, 0.2, -0.2, 0.2)
    rx = receiver_operator(g, np.array([[0.35, 0.1], [-0.3, -0.25]]))
    assert np.all(measure(op, rx, d, np.zeros(d.m, dtype=complex)) == 0)
    assert np.all(measure_adjoint(op, rx, d, np.zeros(2, dtype=complex)) == 0)
    rng = np.random.default_rng(41)
    y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    c = 0.7 - 1.9j
    np.testing.assert_allclose(measure_adjoint(op, rx, d, c * y),
                               c * measure_adjoint(op, rx, d, y), rtol=1e-12)


def test_measure_adjoint_pairing():
    g = small_grid(h=0.05, half=0.5)
    op = assemble_tm(g, OMEGA)
    d = subdomain_indices(g, -0.2, 0.2, -0.2, 0.2)
    rng = np.random.default_rng(43)
    pos = np.stack([0.38 * np.cos(np.linspace(0, 2 * np.pi, 9, endpoint=False)),
                    0.38 * np.sin(np.linspace(0, 2 * np.pi, 9, endpoint=False))], axis=1)
    rx = receiver_operator(g, pos)
    for _ in range(10):
        j = rng.standard_normal(d.m) + 1j * rng.standard_normal(d.m)
        y = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        lhs = np.vdot(y, measure(op, rx, d, j))
        rhs = np.vdot(measure_adjoint(op, rx, d, y), j)
        assert abs(lhs - rhs) / abs(lhs) < 1e-12


def test_measure_delta_source_matches_green():
    g = small_grid()
    op = assemble_tm(g, OMEGA)
    d = subdomain_indices(g, -0.3, 0.3, -0.3, 0.3)
    ang = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    pos = np.stack([0.85 * np.cos(ang), 0.85 * np.sin(ang)], axis=1)
    rx = receiver_operator(g, pos)
    j = np.zeros(d.m, dtype=complex)
    cell = d.m // 2 + 3
    j[cell] = 1.0
    got = measure(op, rx, d, j)
    # analytic: a contrast point source radiates k0^2 * cellarea * G
    x, y = g.centers()
    cx, cy = x[d.indices[cell]], y[d.indices[cell]]
    r = np.hypot(pos[:, 0] - cx, pos[:, 1] - cy)
    ana = op.k0sq * g.cell_area * (-0.25j) * np.exp(0) * fdfd.hankel2(0, (OMEGA / C0) * r)
    err = np.linalg.norm(got - ana) / np.linalg.norm(ana)
    assert err < 0.03


def test_refinement_error_decreases():
    # shrinking cells must shrink the scattering error; receivers kept at
    # 1.0 m so the finest level stays desk-sized
    eps_r, radius = 3.0, 0.2
    lam_in = LAM / np.sqrt(eps_r)
    errs = []
    ang = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    pos = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    for frac in (15, 30, 60):
        g = Cartesian2DGrid.covering(-1.35, 1.35, -1.35, 1.35, lam_in / frac, pml_cells=10)
        xg, yg = g.centers()
        chi = np.where(xg**2 + yg**2 < radius**2, eps_r - 1.0, 0.0).astype(complex)
        op_bg = assemble_tm(g, OMEGA)
        op_obj = assemble_tm(g, OMEGA, chi=chi)
        rhs, src = delta_source(g, 1.15, 0.0)
        rx = receiver_operator(g, pos)
        y_num = rx.weights @ (solve(op_obj, rhs) - solve(op_bg, rhs))
        y_ref = cylinder_scattered_field(OMEGA, eps_r, radius, src, pos)
        errs.append(np.linalg.norm(y_num - y_ref) / np.linalg.norm(y_ref))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.01
