"""Discrete Lebesgue, Morrey, fractional, weak-L^t and BMO quantities on masked grids.

Suprema over balls are taken over a reproducible sample: centers on every
``stride``-th node of a sublattice anchored at the node nearest the region's
centroid (plus optional extra points), and dyadic radii ``2^-j <= 1`` down to
``4h``. Only balls whose node set lies inside the region are used. A node
belongs to the ball ``B_R(c)`` iff ``|x - c| < R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import _kernels
from .grid import Ball, Grid, GridFunction, GridVectorField

NORM_KINDS = ("lq", "morrey", "gagliardo", "nikolski", "marcinkiewicz", "mm", "bmo", "vmo")


@dataclass
class NormReport:
    kind: str
    value: float
    q: float | None = None
    alpha: float | None = None
    theta: float | None = None
    t: float | None = None
    h: float | None = None
    region: str = "mask"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("norm values are non-negative")

    def csv_row(self) -> list:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [self.kind, fmt(self.value), fmt(self.q), fmt(self.alpha), fmt(self.theta), fmt(self.t), fmt(self.h)]


CSV_HEADER = ["kind", "value", "q", "alpha", "theta", "t", "h"]


def resolve_region(grid: Grid, region) -> np.ndarray:
    if region is None:
        out = grid.mask.copy()
    elif isinstance(region, Ball):
        out = region.nodes(grid)
    else:
        region = np.asarray(region, dtype=bool)
        if region.shape != grid.extents:
            raise ValueError("region mask does not match the grid")
        out = region & grid.mask
    if not out.any():
        raise ValueError("empty region")
    return out


def _abs_values(g) -> np.ndarray:
    if isinstance(g, (GridFunction, GridVectorField)):
        return g.abs()
    raise TypeError(f"expected GridFunction or GridVectorField, got {type(g).__name__}")


@dataclass
class BallFamily:
    radius: float
    centers: np.ndarray  # flat indices into the grid array
    offsets: np.ndarray  # flat index offsets of the ball's nodes
    count: int


def ball_offsets(grid: Grid, radius: float) -> np.ndarray:
    r = radius / grid.h
    m = int(np.ceil(r))
    rng = np.arange(-m, m + 1)
    mesh = np.meshgrid(*([rng] * grid.dim), indexing="ij")
    inside = sum(d.astype(float) ** 2 for d in mesh) < r * r
    strides = np.array([int(np.prod(grid.extents[a + 1:])) for a in range(grid.dim)])
    flat = sum(d[inside] * s for d, s in zip(mesh, strides))
    return np.ascontiguousarray(np.sort(flat), dtype=np.int64)


def sample_balls(grid: Grid, region, max_radius: float = 1.0, stride: int = 4,
                 extra_centers=(), min_radius_nodes: float = 4.0) -> list[BallFamily]:
    """Ball sample used by every supremum-over-balls quantity (see module doc)."""
    region = resolve_region(grid, region)
    # distance (node units) to the nearest node outside the region; the
    # array border counts as outside
    dist = ndimage.distance_transform_edt(np.pad(region, 1))[(slice(1, -1),) * grid.dim]
    idx = np.argwhere(region)
    centroid = idx.mean(axis=0)
    anchor = idx[np.argmin(np.sum((idx - centroid) ** 2, axis=1))]
    cand = region.copy()
    sub = np.ones(grid.extents, dtype=bool)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.extents[ax]
        sub &= ((np.arange(grid.extents[ax]) - anchor[ax]) % stride == 0).reshape(shape)
    cand &= sub
    for pt in extra_centers:
        i = grid.nearest_index(pt)
        if region[i]:
            cand[i] = True
    cand_flat = np.flatnonzero(cand)
    cand_dist = dist.ravel()[cand_flat]
    families = []
    j = 0
    while True:
        R = 2.0**-j
        j += 1
        if R > max_radius:
            continue
        if R < min_radius_nodes * grid.h * (1 - 1e-12):
            break
        ok = cand_dist >= R / grid.h
        if not ok.any():
            continue
        offsets = ball_offsets(grid, R)
        families.append(BallFamily(R, np.ascontiguousarray(cand_flat[ok], dtype=np.int64), offsets, offsets.size))
    return families


def _require_families(families):
    if not families:
        raise ValueError("region too small: no sampled ball of radius >= 4h fits inside it")
    return families


def lq_norm(g, q: float, region=None) -> float:
    if q < 1:
        raise ValueError("q must be >= 1")
    region = resolve_region(g.grid, region)
    a = _abs_values(g)[region]
    return float(np.sum(a**q) * g.grid.cell_volume) ** (1.0 / q)


def morrey_norm(g, q: float, theta: float, region=None, **ball_kw) -> float:
    """``(sup R^(theta-n) int_{B_R} |g|^q)^(1/q)`` over sampled balls with ``R <= 1``."""
    grid = g.grid
    if q < 1 or not 0 <= theta <= grid.dim:
        raise ValueError("need q >= 1 and 0 <= theta <= n")
    vals = np.ascontiguousarray((_abs_values(g) ** q).ravel())
    best = 0.0
    for fam in _require_families(sample_balls(grid, region, **ball_kw)):
        sums = _kernels.ball_sums(vals, fam.centers, fam.offsets) * grid.cell_volume
        best = max(best, fam.radius ** (theta - grid.dim) * float(sums.max()))
    return best ** (1.0 / q)


def _gagliardo_weights(grid: Grid, max_d2: int, exponent: float) -> np.ndarray:
    d2 = np.arange(max_d2 + 1, dtype=float)
    w = np.zeros(max_d2 + 1)
    w[1:] = (grid.h * np.sqrt(d2[1:])) ** (-exponent) * grid.cell_volume**2
    return w


def gagliardo_double_sum(g, alpha: float, q: float, region=None, exponent: float | None = None) -> float:
    """``sum_{x != y} |g(x)-g(y)|^q / |x-y|^exponent * h^(2n)`` over region node pairs.

    ``exponent`` defaults to ``n + alpha*q``.
    """
    grid = g.grid
    region = resolve_region(grid, region)
    if exponent is None:
        exponent = grid.dim + alpha * q
    idx = np.ascontiguousarray(np.argwhere(region), dtype=np.int64)
    if isinstance(g, GridVectorField):
        vals = np.ascontiguousarray(g.values[:, region].T)
    else:
        vals = np.ascontiguousarray(g.values[region][:, None])
    span = idx.max(axis=0) - idx.min(axis=0)
    weights = _gagliardo_weights(grid, int(np.sum(span**2)), exponent)
    partial = _kernels.gagliardo_partials(idx, vals, weights, float(q))
    return 2.0 * float(np.sum(partial))


def gagliardo_seminorm(g, alpha: float, q: float, region=None) -> float:
    """Discrete ``[g]_{alpha,q}``: pair sum with diagonal cutoff ``|x-y| >= h``, q-th root."""
    if not 0 < alpha < 1 or q < 1:
        raise ValueError("need 0 < alpha < 1 and q >= 1")
    return gagliardo_double_sum(g, alpha, q, region) ** (1.0 / q)


def _displace(arr, m: int, ax: int) -> np.ndarray:
    """``out[x + m e_ax] = arr[x]``, zero fill, no wrap-around."""
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if m >= 0:
        src[ax], dst[ax] = slice(0, arr.shape[ax] - m), slice(m, None)
    else:
        src[ax], dst[ax] = slice(-m, None), slice(0, arr.shape[ax] + m)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def nikolski_seminorm(g, alpha: float, q: float, region=None, shifts=None) -> float:
    """``max_{i, m} (m h)^(-alpha) ||g(. + m h e_i) - g||_{L^q(region)}`` over ``+-m``.

    ``shifts`` are positive integers (multiples of h); default is dyadic up
    to the largest shift keeping ``region + shift`` inside the mask.
    """
    grid = g.grid
    region = resolve_region(grid, region)
    vals = g.values if isinstance(g, GridVectorField) else g.values[None]
    count = int(region.sum())

    def admissible(m):
        return all(
            np.count_nonzero(_displace(region, sgn * m, ax) & grid.mask) == count
            for ax in range(grid.dim) for sgn in (1, -1)
        )

    m_max = 0
    while m_max < max(grid.extents) and admissible(m_max + 1):
        m_max += 1
    if shifts is None:
        shifts = [2**k for k in range(int(np.log2(m_max)) + 1)] if m_max >= 1 else []
    shifts = [int(m) for m in shifts if 1 <= m <= m_max]
    if not shifts:
        raise ValueError("region too close to the mask boundary for any admissible shift")
    best = 0.0
    for ax in range(grid.dim):
        for m in shifts:
            for sgn in (1, -1):
                shifted = np.stack([_displace(v, -sgn * m, ax) for v in vals])
                diff = np.sqrt(np.sum((shifted - vals) ** 2, axis=0))[region]
                norm = (np.sum(diff**q) * grid.cell_volume) ** (1.0 / q)
                best = max(best, (m * grid.h) ** (-alpha) * norm)
    return float(best)


def weak_quasinorm_power(abs_values: np.ndarray, t: float, cell: float, min_count: int = 1) -> float:
    """``sup_lambda lambda^t |{|w| > lambda}|`` for node values with node weight ``cell``.

    The supremum is evaluated exactly: it is approached as lambda increases to
    a data value. ``min_count`` restricts to level sets holding at least that
    many nodes (a resolution floor for singular data).
    """
    desc = np.sort(np.asarray(abs_values, dtype=float).ravel())[::-1]
    return float(_kernels.weak_sup_sorted(desc, float(t), int(max(min_count, 1)))) * cell


def marcinkiewicz_norm(g, t: float, region=None, min_count: int = 1) -> float:
    """``||g||_{M^t} = (sup_lambda lambda^t |{|g| > lambda}|)^(1/t)``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    region = resolve_region(g.grid, region)
    power = weak_quasinorm_power(_abs_values(g)[region], t, g.grid.cell_volume, min_count)
    return power ** (1.0 / t)


def marcinkiewicz_morrey_norm(g, t: float, theta: float, region=None, min_count: int = 1,
                              include_global: bool = False, **ball_kw) -> float:
    """``[sup_{B_R, R<=1} R^(theta-n) ||g||^t_{M^t(B_R)}]^(1/t)`` over sampled balls.

    With ``include_global`` the ``||g||_{M^t(region)}`` term is added, giving
    the full space norm.
    """
    grid = g.grid
    if t < 1 or not 0 <= theta <= grid.dim:
        raise ValueError("need t >= 1 and 0 <= theta <= n")
    vals = np.ascontiguousarray(_abs_values(g).ravel())
    best = 0.0
    for fam in _require_families(sample_balls(grid, region, **ball_kw)):
        sups = _kernels.ball_weak_sup(vals, fam.centers, fam.offsets, float(t), int(max(min_count, 1)))
        best = max(best, fam.radius ** (theta - grid.dim) * float(sups.max()) * grid.cell_volume)
    value = best ** (1.0 / t)
    if include_global:
        value += marcinkiewicz_norm(g, t, region, min_count)
    return value


def level_set_measures(g, lambdas, region=None) -> np.ndarray:
    """``|{x in region : |g(x)| > lambda}|`` for each lambda (node counting)."""
    region = resolve_region(g.grid, region)
    a = np.sort(_abs_values(g)[region])
    lambdas = np.asarray(lambdas, dtype=float)
    counts = a.size - np.searchsorted(a, lambdas, side="right")
    return counts * g.grid.cell_volume


def level_grid(g, region=None, num: int = 200, lower_quantile: float = 0.0, upper_quantile: float = 1.0):
    """Logarithmic lambda grid between quantiles of the positive values of ``|g|``."""
    region = resolve_region(g.grid, region)
    a = _abs_values(g)[region]
    a = a[a > 0]
    if a.size == 0:
        return np.zeros(0)
    lo, hi = np.quantile(a, [lower_quantile, upper_quantile])
    return np.geomspace(lo, hi, num)


def _scalar_values(g) -> np.ndarray:
    if isinstance(g, GridVectorField):
        raise TypeError("mean oscillation is defined here for scalar grid functions")
    return g.values


def bmo_seminorm(g: GridFunction, region=None, **ball_kw) -> float:
    """``sup_B mean_B |g - (g)_B|`` over sampled balls inside the region."""
    vals = np.ascontiguousarray(_scalar_values(g).ravel())
    best = 0.0
    for fam in _require_families(sample_balls(g.grid, region, **ball_kw)):
        best = max(best, float(_kernels.ball_mean_oscillation(vals, fam.centers, fam.offsets).max()))
    return best


def vmo_modulus(g: GridFunction, R: float, region=None, **ball_kw) -> float:
    """Mean-oscillation supremum restricted to sampled radii ``r <= R``."""
    if R <= 0:
        raise ValueError("R must be positive")
    ball_kw = dict(ball_kw)
    ball_kw["max_radius"] = min(R, ball_kw.get("max_radius", 1.0))
    vals = np.ascontiguousarray(_scalar_values(g).ravel())
    families = sample_balls(g.grid, region, **ball_kw)
    best = 0.0
    for fam in families:
        best = max(best, float(_kernels.ball_mean_oscillation(vals, fam.centers, fam.offsets).max()))
    return best


def truncate_T(g, k: float):
    """``T_k(s) = max(-k, min(k, s))`` applied pointwise."""
    if k <= 0:
        raise ValueError("k must be positive")
    if isinstance(g, GridFunction):
        return GridFunction(g.grid, np.clip(g.values, -k, k))
    return np.clip(np.asarray(g, dtype=float), -k, k)


def truncate_Phi(g, k: float):
    """``Phi_k(s) = T_1(s - T_k(s))`` applied pointwise."""
    if k <= 0:
        raise ValueError("k must be positive")
    if isinstance(g, GridFunction):
        return GridFunction(g.grid, np.clip(g.values - np.clip(g.values, -k, k), -1.0, 1.0))
    s = np.asarray(g, dtype=float)
    return np.clip(s - np.clip(s, -k, k), -1.0, 1.0)


def evaluate_norm(g, kind: str, *, q: float | None = None, alpha: float | None = None,
                  theta: float | None = None, t: float | None = None, R: float | None = None,
                  region=None, min_count: int = 1) -> NormReport:
    """Dispatch one of ``NORM_KINDS`` and wrap the value in a :class:`NormReport`."""

    def need(**kw):
        missing = [k for k, v in kw.items() if v is None]
        if missing:
            raise ValueError(f"norm {kind!r} needs {', '.join(missing)}")

    h = g.grid.h
    if kind == "lq":
        need(q=q)
        value = lq_norm(g, q, region)
    elif kind == "morrey":
        need(q=q, theta=theta)
        value = morrey_norm(g, q, theta, region)
    elif kind == "gagliardo":
        need(q=q, alpha=alpha)
        value = gagliardo_seminorm(g, alpha, q, region)
    elif kind == "nikolski":
        need(q=q, alpha=alpha)
        value = nikolski_seminorm(g, alpha, q, region)
    elif kind == "marcinkiewicz":
        need(t=t)
        value = marcinkiewicz_norm(g, t, region, min_count=min_count)
    elif kind == "mm":
        need(t=t, theta=theta)
        value = marcinkiewicz_morrey_norm(g, t, theta, region, min_count=min_count)
    elif kind == "bmo":
        value = bmo_seminorm(g, region)
    elif kind == "vmo":
        need(R=R)
        value = vmo_modulus(g, R, region)
    else:
        raise ValueError(f"unknown norm kind {kind!r}; choose from {NORM_KINDS}")
    extra = {} if R is None else {"R": R}
    return NormReport(kind, value, q, alpha, theta, t, h, extra=extra)
