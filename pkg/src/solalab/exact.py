"""Closed-form singular solutions: p-Laplace Green functions and power densities.

The Green function on the unit ball with pole at the origin is normalized
by unit flux, ``|Du|^(p-1) * |S^(n-1)| * r^(n-1) = 1``, which is the unique
choice making ``-Delta_p u = delta_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exponents import exponent_b
from .grid import Grid, GridFunction, GridVectorField
from .measures import DiscreteMeasure


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class GreenFunction:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 2 or not 2 <= self.p <= self.n:
            raise ValueError(f"Green function needs 2 <= p <= n, got n={self.n}, p={self.p}")

    @property
    def normalization(self) -> float:
        flux = sphere_area(self.n) ** (-1.0 / (self.p - 1))
        if self.p < self.n:
            return flux * (self.p - 1) / (self.n - self.p)
        return flux

    @property
    def b(self) -> float:
        return exponent_b(self.n, self.p)

    def value_radial(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("Green function is singular at the origin")
        c = self.normalization
        if self.p < self.n:
            return c * (r ** ((self.p - self.n) / (self.p - 1)) - 1)
        return c * np.log(1.0 / r)

    def gradient_magnitude(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("Green gradient is singular at the origin")
        return (sphere_area(self.n) * r ** (self.n - 1)) ** (-1.0 / (self.p - 1))

    def flux(self, r):
        """``|Du|^(p-1) |S^(n-1)| r^(n-1)``; identically one."""
        return self.gradient_magnitude(r) ** (self.p - 1) * sphere_area(self.n) * np.asarray(r) ** (self.n - 1)

    def level_radius(self, lam):
        """Radius where ``|Du| = lam``."""
        lam = np.asarray(lam, dtype=float)
        return (sphere_area(self.n) * lam ** (self.p - 1)) ** (-1.0 / (self.n - 1))

    def levelset_measure(self, lam):
        """``|{x in B_1 : |Du(x)| > lam}|``."""
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambda must be positive")
        r = np.minimum(self.level_radius(lam), 1.0)
        return ball_volume(self.n) * r**self.n

    def weak_norm_power(self) -> float:
        """``sup_lambda lambda^b |{|Du| > lambda}|`` over B_1 (closed form)."""
        return ball_volume(self.n) * sphere_area(self.n) ** (-self.n / (self.n - 1))

    def annulus_gradient_integral(self, rho: float, t: float | None = None) -> float:
        """``int_{rho < |x| < 1} |Du|^t``, default ``t = b``."""
        t = self.b if t is None else t
        a = sphere_area(self.n)

        def integrand(r):
            return self.gradient_magnitude(r) ** t * a * r ** (self.n - 1)

        return integrate.quad(integrand, rho, 1.0, limit=200)[0]


def radial_cell_average(primitive, h: float, n: int) -> float:
    """Average of a radial ``f(|x|)`` over the cube ``[-h/2, h/2]^n``.

    ``primitive(rho) = int_0^rho f(r) r^(n-1) dr``. Uses
    ``int_cube f = 2n * int_face primitive(|y|) (h/2) |y|^(-n) dS(y)``.
    """
    a = h / 2
    if n == 2:
        face = integrate.quad(lambda t: primitive(math.hypot(a, t)) * a / (a * a + t * t), -a, a)[0]
    elif n == 3:
        face = integrate.dblquad(
            lambda t1, t2: primitive(math.sqrt(a * a + t1 * t1 + t2 * t2)) * a / (a * a + t1 * t1 + t2 * t2) ** 1.5,
            -a, a, -a, a,
        )[0]
    else:
        raise ValueError("only n = 2, 3 supported")
    return 2 * n * face / h**n


def _origin_index(grid: Grid):
    idx = np.asarray(grid.nearest_index(np.zeros(grid.dim)))
    axes = grid.axes()
    if max(abs(axes[a][idx[a]]) for a in range(grid.dim)) > 1e-9 * grid.h:
        return None
    return tuple(int(i) for i in idx)


def sample_green_gradient(gf: GreenFunction, grid: Grid) -> GridVectorField:
    """``Du = -|Du| x/|x|`` at every node; a node at the origin gets the cell mean, 0."""
    if grid.dim != gf.n:
        raise ValueError("grid dimension differs from the Green function's")
    coords = grid.coords()
    r = grid.radius()
    safe = np.where(r > 0, r, 1.0)
    mag = np.where(r > 0, gf.gradient_magnitude(safe), 0.0)
    vals = np.stack([-mag * x / safe for x in coords])
    return GridVectorField(grid, np.where(grid.mask, vals, 0.0))


def sample_green_value(gf: GreenFunction, grid: Grid) -> GridFunction:
    """Green function at every node; a node at the origin gets the exact cell average."""
    r = grid.radius()
    safe = np.where(r > 0, r, 1.0)
    vals = np.where(r > 0, gf.value_radial(safe), 0.0)
    o = _origin_index(grid)
    if o is not None:
        n, p, c = gf.n, gf.p, gf.normalization
        if p < n:
            beta = (p - n) / (p - 1)

            def prim(rho):
                return c * (rho ** (beta + n) / (beta + n) - rho**n / n)
        else:

            def prim(rho):
                return c * (rho**n / n * math.log(1.0 / rho) + rho**n / n**2)

        vals[o] = radial_cell_average(prim, grid.h, n)
    return GridFunction(grid, np.where(grid.mask, vals, 0.0))


def radial_singular_density(alpha: float, grid: Grid, scale: float = 1.0) -> DiscreteMeasure:
    """Measure with density ``scale * |x|^(-alpha)``; density exponent theta = alpha."""
    n = grid.dim
    if not 0 < alpha < n:
        raise ValueError(f"need 0 < alpha < n for local integrability, got {alpha}")
    r = grid.radius()
    safe = np.where(r > 0, r, 1.0)
    vals = np.where(r > 0, safe ** (-alpha), 0.0)
    o = _origin_index(grid)
    if o is not None:
        vals[o] = radial_cell_average(lambda rho: rho ** (n - alpha) / (n - alpha), grid.h, n)
    return DiscreteMeasure(grid, density=GridFunction(grid, scale * np.where(grid.mask, vals, 0.0)))
