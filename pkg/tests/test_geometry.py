import numpy as np
import pytest

from cstomo.errors import ConfigurationError
from cstomo.geometry import (
    Cartesian2DGrid,
    ContrastMap,
    chi_at_frequency,
    clip_nonnegative,
    make_austria_phantom,
    master_from_parts,
    subdomain_indices,
)

OMEGA_03GHZ = 2 * np.pi * 3e8


def imaging_grid(h=0.03, pml=10):
    return Cartesian2DGrid.covering(-1.5, 1.5, -1.5, 1.5, h, pml_cells=pml)


def test_grid_validation():
    with pytest.raises(ValueError):
        Cartesian2DGrid(nx=0, ny=4, dx=0.1, dy=0.1, x0=0, y0=0, pml_cells=0)
    with pytest.raises(ValueError):
        Cartesian2DGrid(nx=8, ny=8, dx=-0.1, dy=0.1, x0=0, y0=0, pml_cells=0)
    with pytest.raises(ValueError):
        Cartesian2DGrid(nx=8, ny=8, dx=0.1, dy=0.1, x0=0, y0=0, pml_cells=4)


def test_covering_contains_requested_box():
    g = imaging_grid()
    xmin, xmax, ymin, ymax = g.interior_bounds()
    tol = 1e-9
    assert xmin <= -1.5 + tol and xmax >= 1.5 - tol
    assert ymin <= -1.5 + tol and ymax >= 1.5 - tol
    assert g.dx == g.dy == 0.03


def test_cell_round_trip():
    g = imaging_grid()
    ix, iy = g.cell_of(0.514, -0.217)
    x, y = g.centers()
    k = g.flat_index(ix, iy)
    assert abs(x[k] - 0.514) <= g.dx / 2 + 1e-12
    assert abs(y[k] + 0.217) <= g.dy / 2 + 1e-12


def test_subdomain_basic_invariants():
    g = imaging_grid()
    d = subdomain_indices(g, -1.2, 1.2, -1.2, 1.2)
    idx = d.indices
    assert np.all(np.diff(idx) > 0)
    assert idx[0] >= 0 and idx[-1] < g.n
    x, y = g.centers()
    assert np.all(g.in_interior(x[idx], y[idx]))


def test_subdomain_rejects_pml_overlap():
    g = imaging_grid()
    with pytest.raises(ConfigurationError):
        subdomain_indices(g, -10.0, 10.0, -10.0, 10.0)
    with pytest.raises(ConfigurationError):
        subdomain_indices(g, 50.0, 51.0, 50.0, 51.0)


def test_extend_restrict_round_trip():
    g = imaging_grid()
    d = subdomain_indices(g, -0.5, 0.5, -0.5, 0.5)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(d.m) + 1j * rng.standard_normal(d.m)
    full = d.extend(v, g.n)
    assert np.array_equal(d.restrict(full), v)
    assert np.count_nonzero(full) <= d.m


def test_phantom_disk_and_hole_values():
    g = imaging_grid()
    c = make_austria_phantom(g, 2.0, 0.005)
    ix, iy = g.cell_of(0.3, 0.6)     # center of the right disk
    k = g.flat_index(ix, iy)
    assert c.d_eps[k] == 2.0 and c.d_sigma[k] == 0.005
    ix, iy = g.cell_of(0.0, -0.2)    # ring hole
    k = g.flat_index(ix, iy)
    assert c.d_eps[k] == 0.0 and c.d_sigma[k] == 0.0


def test_phantom_ring_area_matches_annulus():
    # analytic annulus area oracle: pi (r_out^2 - r_in^2)
    expected = np.pi * (0.6**2 - 0.3**2)
    g = imaging_grid(h=0.03)
    c = make_austria_phantom(g, 1.0, 0.0)
    x, y = g.centers()
    rr = np.hypot(x, y + 0.2)
    # disks are disjoint from the ring, nearest disk cell is > 0.65 m away
    counted = np.count_nonzero((c.d_eps > 0) & (rr < 0.65)) * g.cell_area
    assert abs(counted - expected) / expected < 0.02


def test_phantom_raster_converges():
    areas = {}
    for h in (0.03, 0.015):
        g = imaging_grid(h=h)
        c = make_austria_phantom(g, 1.0, 0.0)
        x, y = g.centers()
        rr = np.hypot(x, y + 0.2)
        ring = np.count_nonzero((c.d_eps > 0) & (rr < 0.65)) * g.cell_area
        disks = np.count_nonzero((c.d_eps > 0) & (rr >= 0.65)) * g.cell_area
        areas[h] = (ring, disks)
    for k in range(2):
        a, b = areas[0.03][k], areas[0.015][k]
        assert abs(a - b) / b < 0.01


def test_phantom_needs_room():
    small = Cartesian2DGrid.covering(-0.5, 0.5, -0.5, 0.5, 0.05, pml_cells=5)
    with pytest.raises(ConfigurationError):
        make_austria_phantom(small, 2.0, 0.005)


def test_phantom_on_subdomain_matches_full_grid():
    g = imaging_grid()
    d = subdomain_indices(g, -1.2, 1.2, -1.2, 1.2)
    full = make_austria_phantom(g, 2.0, 0.005)
    sub = make_austria_phantom(g, 2.0, 0.005, subdomain=d)
    assert np.array_equal(sub.d_eps, full.d_eps[d.indices])
    assert np.array_equal(sub.d_sigma, full.d_sigma[d.indices])


def test_chi_values():
    c = ContrastMap(np.array([2.0]), np.array([0.0]))
    assert chi_at_frequency(c, OMEGA_03GHZ)[0] == 2.0 + 0.0j
    c = ContrastMap(np.array([2.0]), np.array([0.005]))
    chi = chi_at_frequency(c, OMEGA_03GHZ)[0]
    assert chi.real == 2.0
    assert chi.imag == pytest.approx(-0.005 / OMEGA_03GHZ, rel=1e-12)
    assert chi.imag == pytest.approx(-2.6526e-12, rel=1e-4)


def test_chi_linearity_and_frequency_scaling():
    rng = np.random.default_rng(11)
    de = rng.uniform(0, 3, 40)
    ds = rng.uniform(0, 0.02, 40)
    c = ContrastMap(de, ds)
    w1, w2 = 2 * np.pi * 1e8, 2 * np.pi * 4e8
    chi1 = chi_at_frequency(c, w1)
    chi2 = chi_at_frequency(c, w2)
    np.testing.assert_allclose(chi1.real, chi2.real, rtol=0, atol=0)
    np.testing.assert_allclose(w1 * chi1.imag, w2 * chi2.imag, rtol=1e-13)


def test_chi_rejects_bad_omega():
    c = ContrastMap(np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        chi_at_frequency(c, 0.0)
    with pytest.raises(ValueError):
        chi_at_frequency(c, -1.0)


def test_master_round_trip():
    rng = np.random.default_rng(5)
    de = rng.uniform(0, 2, 25)
    ds = rng.uniform(0, 0.01, 25)
    w1 = 2 * np.pi * 1e8
    chi = chi_at_frequency(ContrastMap(de, ds), w1)
    back = master_from_parts(chi.real, chi.imag, w1)
    np.testing.assert_allclose(back.d_eps, de, rtol=1e-14)
    np.testing.assert_allclose(back.d_sigma, ds, rtol=1e-12, atol=1e-18)


def test_clip_nonnegative():
    c = ContrastMap(np.array([1.0, -0.5, 0.0]), np.array([-1e-3, 2e-3, 0.0]))
    p = clip_nonnegative(c)
    assert np.all(p.d_eps >= 0) and np.all(p.d_sigma >= 0)
    assert p.d_eps[0] == 1.0 and p.d_sigma[1] == 2e-3
    # idempotent
    q = clip_nonnegative(p)
    assert np.array_equal(q.d_eps, p.d_eps) and np.array_equal(q.d_sigma, p.d_sigma)


def test_contrast_map_shape_check():
    with pytest.raises(ValueError):
        ContrastMap(np.zeros(3), np.zeros(4))
