import math

import numpy as np
import pytest

from solalab.exact import radial_singular_density
from solalab.grid import (
    Ball,
    Grid,
    GridFunction,
    GridVectorField,
    box_grid,
    disk_grid,
    gradient,
    read_grid_file,
    square_grid,
    write_grid_file,
)
from solalab.norms import (
    bmo_seminorm,
    evaluate_norm,
    gagliardo_double_sum,
    gagliardo_seminorm,
    level_set_measures,
    lq_norm,
    marcinkiewicz_morrey_norm,
    marcinkiewicz_norm,
    morrey_norm,
    nikolski_seminorm,
    sample_balls,
    truncate_Phi,
    truncate_T,
    vmo_modulus,
)

FLOOR_2D = math.ceil(math.pi * 8**2)


@pytest.fixture(scope="module")
def square64():
    return square_grid(1 / 64)


def test_disk_mask_by_node_centers():
    g = disk_grid(0.25)
    assert g.extents == (9, 9)
    assert g.mask.sum() == np.sum(g.radius() < 1)
    assert not g.mask[0, 4] and g.mask[1, 4]


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((0.0, 0.0), -1.0, (3, 3), np.ones((3, 3), bool))
    with pytest.raises(ValueError):
        Grid((0.0, 0.0), 0.1, (3, 3), np.zeros((3, 3), bool))


def test_gradient_exact_on_linear(square64):
    X, Y = square64.coords()
    d = gradient(GridFunction(square64, 3 * X - Y))
    np.testing.assert_allclose(d.values[0][square64.mask], 3, atol=1e-12)
    np.testing.assert_allclose(d.values[1][square64.mask], -1, atol=1e-12)
    d0 = gradient(GridFunction(square64, np.full(square64.extents, 2.5)))
    assert np.abs(d0.values).max() == 0


def test_gradient_second_order_interior():
    errs = []
    for h in (1 / 32, 1 / 64, 1 / 128):
        g = square_grid(h)
        X, Y = g.coords()
        d = gradient(GridFunction(g, np.sin(X) * np.exp(Y)))
        inner = (X > 0.1) & (X < 0.9) & (Y > 0.1) & (Y < 0.9)
        errs.append(np.abs(d.values[0] - np.cos(X) * np.exp(Y))[inner].max())
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)
    g = square_grid(1 / 128)
    X, Y = g.coords()
    d = gradient(GridFunction(g, X**2 + Y**2))
    interior = np.zeros(g.extents, bool)
    interior[1:-1, 1:-1] = True
    assert np.abs(d.values[0] - 2 * X)[interior].max() < 1e-12


def test_gradient_rejects_single_node():
    g = box_grid((0, 0), (0.2, 0.2), 0.1, mask=np.eye(3, dtype=bool) & np.eye(3, k=0, dtype=bool)[::-1])
    with pytest.raises(ValueError):
        gradient(GridFunction(g, np.ones(g.extents)))


def test_values_outside_mask_are_zeroed():
    g = disk_grid(0.25)
    f = GridFunction(g, np.ones(g.extents))
    assert f.values[0, 0] == 0


def test_lq_norm_midpoint_rule(square64):
    f = GridFunction(square64, np.ones(square64.extents))
    assert lq_norm(f, 1) == pytest.approx(65 * 65 / 64**2)
    assert lq_norm(f * -3, 2) == pytest.approx(3 * lq_norm(f, 2))


def test_morrey_constant_function(square64):
    one = GridFunction(square64, np.ones(square64.extents))
    # best ball has R = 1/2, value ~ pi R^theta
    assert morrey_norm(one, 1, 1) == pytest.approx(math.pi * 0.5, rel=0.01)


def test_morrey_radial_power_is_two_pi():
    g = disk_grid(1 / 64)
    dens = radial_singular_density(1.0, g).density
    assert morrey_norm(dens, 1, 1) == pytest.approx(2 * math.pi, rel=0.01)


def test_morrey_theta_n_bounded_by_lq(square64):
    X, Y = square64.coords()
    f = GridFunction(square64, np.exp(X) + Y**2)
    assert morrey_norm(f, 2, 2) ** 2 <= lq_norm(f, 2) ** 2


def test_morrey_monotone_in_theta():
    g = disk_grid(1 / 64)
    rng = np.random.default_rng(0)
    f = GridFunction(g, rng.lognormal(size=g.extents))
    vals = [morrey_norm(f, 1.5, th) for th in (0.5, 1.0, 1.5, 2.0)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    mm = [marcinkiewicz_morrey_norm(f, 2, th) for th in (0.5, 1.0, 2.0)]
    assert all(b <= a for a, b in zip(mm, mm[1:]))


def test_morrey_scaling():
    r = 0.5
    big = disk_grid(1 / 64, 1.0)
    small = disk_grid(r / 64, r)
    Xb, Yb = big.coords()
    Xs, Ys = small.coords()
    gt = GridFunction(big, 1 + np.cos(3 * Xb * r) + (Yb * r) ** 2)
    g = GridFunction(small, 1 + np.cos(3 * Xs) + Ys**2)
    for q, th in ((1, 1), (2, 1.5)):
        assert morrey_norm(gt, q, th) == pytest.approx(r ** (-th / q) * morrey_norm(g, q, th), rel=0.02)


def test_ball_sampling_stays_inside_region():
    g = disk_grid(1 / 64)
    region = Ball((0.0, 0.0), 0.5)
    fams = sample_balls(g, region)
    assert fams and min(f.radius for f in fams) >= 4 * g.h
    inside = region.nodes(g).ravel()
    for fam in fams:
        nodes = (fam.centers[:, None] + fam.offsets[None, :]).ravel()
        assert inside[nodes].all()


def test_gagliardo_constant_and_invariance(square64):
    X, Y = square64.coords()
    c = GridFunction(square64, np.full(square64.extents, 4.0))
    assert gagliardo_seminorm(c, 0.5, 1) == 0
    f = GridFunction(square64, np.sin(4 * X) * Y)
    a = gagliardo_seminorm(f, 0.4, 1.5)
    assert gagliardo_seminorm(f + 7.0, 0.4, 1.5) == pytest.approx(a, rel=1e-12)
    assert gagliardo_seminorm(f * -2, 0.4, 1.5) == pytest.approx(2 * a, rel=1e-12)


def test_gagliardo_symmetric_pair_sum():
    g = square_grid(1 / 8)
    rng = np.random.default_rng(1)
    v = rng.normal(size=g.extents)
    idx = np.argwhere(g.mask)
    x = idx * g.h
    vals = v[g.mask]
    d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    off = d > 0
    brute = np.sum(np.abs(vals[:, None] - vals[None, :])[off] ** 1.3 / d[off] ** (2 + 0.6 * 1.3)) * g.h**4
    assert gagliardo_double_sum(GridFunction(g, v), 0.6, 1.3) == pytest.approx(brute, rel=1e-12)


def test_gagliardo_linear_refinement_stable():
    vals = []
    for h in (1 / 32, 1 / 64):
        g = square_grid(h)
        X, _ = g.coords()
        vals.append(gagliardo_seminorm(GridFunction(g, X), 0.5, 1))
    assert abs(vals[1] - vals[0]) / vals[1] <= 0.05


def test_gagliardo_deterministic():
    g = disk_grid(1 / 32)
    rng = np.random.default_rng(7)
    f = GridVectorField(g, rng.normal(size=(2,) + g.extents))
    a = gagliardo_seminorm(f, 0.7, 1.0)
    b = gagliardo_seminorm(f, 0.7, 1.0)
    assert a == b


def test_fractional_poincare_constant_stable():
    g = disk_grid(1 / 64)
    X, Y = g.coords()
    rng = np.random.default_rng(3)
    alpha, q = 0.5, 1.0
    for _ in range(3):
        k = rng.uniform(1, 4, 2)
        f = GridFunction(g, np.sin(k[0] * X + 1) * np.cos(k[1] * Y))
        consts = []
        for R in (0.5, 0.25, 0.125):
            ball = Ball((0.0, 0.0), R)
            nodes = ball.nodes(g)
            mean = f.values[nodes].mean()
            lhs = np.sum(np.abs(f.values[nodes] - mean) ** q) * g.cell_volume
            consts.append(lhs / (R ** (alpha * q) * gagliardo_seminorm(f, alpha, q, ball) ** q))
        assert max(consts) / min(consts) < 3


def test_nikolski_linear_function():
    g = square_grid(1 / 64)
    X, _ = g.coords()
    region = Ball((0.5, 0.5), 0.25)
    area = region.nodes(g).sum() * g.cell_volume
    assert nikolski_seminorm(GridFunction(g, X), 1.0, 1.0, region) == pytest.approx(area, rel=1e-12)
    assert nikolski_seminorm(GridFunction(g, np.ones(g.extents)), 0.5, 1, region) == 0


def test_nikolski_needs_margin():
    g = square_grid(1 / 16)
    with pytest.raises(ValueError):
        nikolski_seminorm(GridFunction(g, np.ones(g.extents)), 0.5, 1)


def test_nikolski_below_gagliardo_on_smooth_samples():
    g = square_grid(1 / 64)
    X, Y = g.coords()
    region = Ball((0.5, 0.5), 0.25)
    for k in (1, 2, 3):
        f = GridFunction(g, np.sin(k * X) * np.cos(Y))
        assert nikolski_seminorm(f, 0.5, 1, region) < gagliardo_seminorm(f, 0.5, 1, region)


def test_marcinkiewicz_power_function():
    g = disk_grid(1 / 128)
    r = g.radius()
    safe = np.where(r > 0, r, 1.0)
    for gam in (0.5, 1.0, 1.5):
        f = GridFunction(g, np.where(r > 0, safe**-gam, 0.0))
        t = 2 / gam
        val = marcinkiewicz_norm(f, t, min_count=FLOOR_2D) ** t
        assert val == pytest.approx(math.pi, rel=0.05)


def test_marcinkiewicz_bounded_and_homogeneous(square64):
    rng = np.random.default_rng(4)
    v = rng.uniform(-2, 2, square64.extents)
    f = GridFunction(square64, v)
    t = 3.0
    area = square64.mask.sum() * square64.cell_volume
    assert marcinkiewicz_norm(f, t) ** t <= 2**t * area
    assert marcinkiewicz_norm(f * -5, t) == pytest.approx(5 * marcinkiewicz_norm(f, t), rel=1e-12)


def test_marcinkiewicz_morrey_theta_n_collapse():
    g = disk_grid(1 / 64)
    X, Y = g.coords()
    f = GridFunction(g, 1 / (0.05 + X**2 + Y**2))
    full = marcinkiewicz_norm(f, 2)
    mm = marcinkiewicz_morrey_norm(f, 2, 2)
    assert 0.9 * full <= mm <= full
    both = marcinkiewicz_morrey_norm(f, 2, 2, include_global=True)
    assert both == pytest.approx(mm + full)


def test_level_set_measures():
    g = square_grid(1 / 4)
    f = GridFunction(g, np.arange(25.0).reshape(5, 5))
    np.testing.assert_allclose(level_set_measures(f, [-1, 0, 23.5, 24]), np.array([25, 24, 1, 0]) / 16)


def test_bmo_and_vmo():
    g = disk_grid(1 / 64)
    c = GridFunction(g, np.full(g.extents, 3.0))
    assert bmo_seminorm(c) == 0
    X, Y = g.coords()
    f = GridFunction(g, np.log(0.01 + X**2 + Y**2))
    mods = [vmo_modulus(f, R) for R in (1 / 16, 1 / 8, 1 / 4, 1 / 2)]
    assert all(b >= a for a, b in zip(mods, mods[1:]))
    assert mods[-1] <= bmo_seminorm(f)


def test_truncations():
    g = square_grid(1 / 4)
    half = GridFunction(g, np.full(g.extents, 0.5))
    assert np.all(truncate_T(half, 1).values == 0.5) and np.all(truncate_Phi(half, 1).values == 0)
    three = np.full(g.extents, 3.0)
    assert np.all(truncate_T(three, 1) == 1) and np.all(truncate_Phi(three, 1) == 1)
    rng = np.random.default_rng(2)
    v = rng.normal(scale=3, size=1000)
    for k in (0.5, 1, 2):
        T, P = truncate_T(v, k), truncate_Phi(v, k)
        assert np.all(np.abs(T) <= k) and np.all(np.abs(P) <= 1)
        np.testing.assert_allclose(T + (v - T), v)
        assert np.all((P != 0) == (np.abs(v) > k))
        big = np.abs(v) > k + 1
        np.testing.assert_array_equal(P[big], np.sign(v[big]))


def test_evaluate_norm_dispatch(square64):
    X, Y = square64.coords()
    f = GridFunction(square64, X + Y)
    rep = evaluate_norm(f, "lq", q=2)
    assert rep.value == pytest.approx(lq_norm(f, 2)) and rep.h == square64.h
    assert rep.csv_row()[0] == "lq"
    with pytest.raises(ValueError):
        evaluate_norm(f, "morrey", q=1)
    with pytest.raises(ValueError):
        evaluate_norm(f, "sobolev", q=1)


@pytest.mark.parametrize("dim", [2, 3])
def test_grid_file_roundtrip(tmp_path, dim):
    g = disk_grid(1 / 8, dim=dim, center=(0.1,) * dim)
    rng = np.random.default_rng(dim)
    s = GridFunction(g, rng.normal(size=g.extents))
    v = GridVectorField(g, rng.normal(size=(dim,) + g.extents))
    for field in (s, v):
        path = tmp_path / "f.sgf"
        write_grid_file(path, field)
        back = read_grid_file(path)
        assert type(back) is type(field)
        assert back.grid.h == g.h and back.grid.origin == g.origin and back.grid.extents == g.extents
        np.testing.assert_array_equal(back.grid.mask, g.mask)
        np.testing.assert_array_equal(back.values, field.values)


def test_grid_file_rejects_garbage(tmp_path):
    p = tmp_path / "bad.sgf"
    p.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        read_grid_file(p)
