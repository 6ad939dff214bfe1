import math

import numpy as np
import pytest

from solalab.exact import (
    GreenFunction,
    ball_volume,
    radial_cell_average,
    radial_singular_density,
    sample_green_gradient,
    sample_green_value,
    sphere_area,
)
from solalab.grid import Ball, GridFunction, disk_grid, square_grid
from solalab.measures import DiscreteMeasure, bump, measure_density_fit, mollifier_stencil, mollify
from solalab.norms import lq_norm


@pytest.fixture(scope="module")
def disk128():
    return disk_grid(1 / 128)


def test_dirac_mass_preserved(disk128):
    mu = DiscreteMeasure.dirac(disk128)
    for k in (1, 4, 16, 64):
        f = mollify(mu, k)
        assert lq_norm(f, 1) == pytest.approx(1.0, abs=1e-3)


def test_off_lattice_atom_mass_preserved(disk128):
    mu = DiscreteMeasure(disk128, [((0.1234, -0.0567), 2.0)])
    assert float(np.sum(mollify(mu, 16).values)) * disk128.cell_volume == pytest.approx(2.0, abs=1e-3)


def test_mollified_support(disk128):
    pt = (0.2, 0.1)
    f = mollify(DiscreteMeasure(disk128, [(pt, 1.0)]), 8)
    r = disk128.radius(pt)
    assert np.all(f.values[r >= 1 / 8] == 0)
    assert np.all(f.values[r < 1 / 16] > 0)


def test_mass_bound_near_boundary(disk128):
    mu = DiscreteMeasure(disk128, [((0.97, 0.0), 1.0), ((0.0, 0.0), -0.5)])
    f = mollify(mu, 8)
    assert lq_norm(f, 1) <= mu.total_variation() + 1e-12


def test_mollify_resolution_guard():
    g = disk_grid(1 / 32)
    with pytest.raises(ValueError):
        mollify(DiscreteMeasure.dirac(g), 32)
    with pytest.raises(ValueError):
        mollify(DiscreteMeasure.dirac(g), 2.5)


def test_mollifier_consistency_on_smooth_density():
    g = square_grid(1 / 256)
    X, Y = g.coords()
    smooth = np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y) + 2
    mu = DiscreteMeasure(g, density=GridFunction(g, smooth))
    inner = (X > 0.3) & (X < 0.7) & (Y > 0.3) & (Y < 0.7)
    errs = [np.abs(mollify(mu, k).values - smooth)[inner].max() for k in (8, 16, 32)]
    assert errs[0] / errs[1] >= 2 and errs[1] / errs[2] >= 2


def test_stencil_normalized_with_outer_annulus_mass():
    h = 1 / 256
    st = mollifier_stencil(h, 2, 4)
    assert st.sum() * h * h == pytest.approx(1.0, rel=1e-14)
    # unscaled bump has at least 1/1000 of its mass outside B_{1/2}
    hh = 1e-3
    ax = np.arange(-1, 1 + hh, hh)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    r2 = X**2 + Y**2
    phi = bump(r2)
    phi /= phi.sum() * hh * hh
    assert np.sum(phi[r2 >= 0.25]) * hh * hh >= 1e-3


def test_total_variation_ignores_outside_atoms(disk128):
    mu = DiscreteMeasure(disk128, [((0.0, 0.0), -1.5), ((2.0, 0.0), 4.0)])
    assert mu.total_variation() == pytest.approx(1.5)
    assert mu.scaled(2).total_variation() == pytest.approx(3.0)
    with pytest.raises(ValueError):
        DiscreteMeasure(disk128, [((0.0,), 1.0)])


def test_density_fit_atom_and_lebesgue():
    g = disk_grid(1 / 64)
    theta, M = measure_density_fit(DiscreteMeasure.dirac(g))
    assert theta == pytest.approx(2.0, abs=1e-12) and M == pytest.approx(1.0)
    leb = DiscreteMeasure(g, density=GridFunction(g, np.ones(g.extents)))
    theta, _ = measure_density_fit(leb, region=Ball((0.0, 0.0), 0.1))
    assert abs(theta) < 0.05
    with pytest.raises(ValueError):
        measure_density_fit(DiscreteMeasure(g))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_density_fit_power_density(alpha):
    g = disk_grid(1 / 128)
    theta, M = measure_density_fit(radial_singular_density(alpha, g), theta=alpha)
    assert theta == pytest.approx(alpha, abs=0.05)
    assert M == pytest.approx(2 * math.pi / (2 - alpha), rel=0.05)


def test_radial_density_ball_mass():
    g = disk_grid(1 / 128)
    mu = radial_singular_density(1.0, g)
    for R in (0.5, 0.25, 0.125):
        assert mu.ball_mass((0.0, 0.0), R) == pytest.approx(2 * math.pi * R, rel=0.02)
    with pytest.raises(ValueError):
        radial_singular_density(2.0, g)


def test_sphere_and_ball():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)


@pytest.mark.parametrize("n,p", [(2, 2), (3, 3), (3, 2), (3, 2.5), (4, 3)])
def test_green_unit_flux(n, p):
    gf = GreenFunction(n, p)
    r = np.geomspace(1e-6, 1, 50)
    np.testing.assert_allclose(gf.flux(r), 1.0, rtol=1e-12)
    # |Du| is minus the radial derivative of the value
    rr = 0.3
    d = (gf.value_radial(rr * (1 - 1e-6)) - gf.value_radial(rr * (1 + 1e-6))) / (2e-6 * rr)
    assert d == pytest.approx(float(gf.gradient_magnitude(rr)), rel=1e-8)
    assert gf.value_radial(1.0) == pytest.approx(0.0, abs=1e-15)


def test_green_examples():
    g2 = GreenFunction(2, 2)
    assert g2.normalization == pytest.approx(1 / (2 * math.pi))
    assert g2.gradient_magnitude(0.25) == pytest.approx(1 / (2 * math.pi * 0.25))
    g3 = GreenFunction(3, 3)
    assert g3.gradient_magnitude(0.5) == pytest.approx((4 * math.pi) ** -0.5 / 0.5)
    with pytest.raises(ValueError):
        g2.value_radial(0.0)
    with pytest.raises(ValueError):
        GreenFunction(2, 3)


def test_green_level_sets_and_weak_norm():
    gf = GreenFunction(2, 2)
    lam = np.array([0.01, 0.1, 1.0, 10.0])
    np.testing.assert_allclose(gf.levelset_measure(lam), np.minimum(1 / (4 * math.pi * lam**2), math.pi))
    assert gf.weak_norm_power() == pytest.approx(1 / (4 * math.pi))
    lam = np.geomspace(1e-3, 1e3, 20001)
    assert np.max(lam**2 * gf.levelset_measure(lam)) == pytest.approx(1 / (4 * math.pi), rel=1e-6)
    g3 = GreenFunction(3, 3)
    assert g3.weak_norm_power() == pytest.approx(4 * math.pi / 3 * (4 * math.pi) ** -1.5)


def test_green_lb_integral_diverges_like_log():
    gf = GreenFunction(2, 2)
    for rho in (1e-2, 1e-4):
        assert gf.annulus_gradient_integral(rho) == pytest.approx(math.log(1 / rho) / (2 * math.pi), rel=1e-8)


def test_cell_average_matches_brute_force():
    h = 0.1
    gf = GreenFunction(2, 2)
    g = disk_grid(h)
    u = sample_green_value(gf, g)
    o = g.nearest_index((0.0, 0.0))
    m = 2000
    t = (np.arange(m) + 0.5) / m * h - h / 2
    X, Y = np.meshgrid(t, t, indexing="ij")
    brute = np.mean(gf.value_radial(np.sqrt(X**2 + Y**2)))
    assert u.values[o] == pytest.approx(brute, rel=1e-5)
    # p < n branch in 3-D
    g3 = GreenFunction(3, 2)
    c3 = radial_cell_average(lambda rho: g3.normalization * (rho**2 / 2 - rho**3 / 3), h, 3)
    X3 = (np.arange(100) + 0.5) / 100 * h - h / 2
    A, B, C = np.meshgrid(X3, X3, X3, indexing="ij")
    assert c3 == pytest.approx(np.mean(g3.value_radial(np.sqrt(A**2 + B**2 + C**2))), rel=2e-3)


def test_sampled_green_gradient():
    g = disk_grid(1 / 32)
    du = sample_green_gradient(GreenFunction(2, 2), g)
    o = g.nearest_index((0.0, 0.0))
    assert np.all(du.values[:, o[0], o[1]] == 0)
    r = g.radius()
    sel = g.mask & (r > 0)
    np.testing.assert_allclose(du.abs()[sel], 1 / (2 * math.pi * r[sel]))
    X, Y = g.coords()
    assert np.all(du.values[0][sel] * X[sel] <= 0)
