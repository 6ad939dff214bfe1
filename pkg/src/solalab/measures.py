"""Finite signed measures on a grid, their mollification and density fitting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .grid import Grid, GridFunction
from .norms import resolve_region


@dataclass(eq=False)
class DiscreteMeasure:
    """Atoms ``sum w_i delta_{a_i}`` plus an optional density sampled on ``grid``."""

    grid: Grid
    atoms: list[tuple[tuple[float, ...], float]] = field(default_factory=list)
    density: GridFunction | None = None

    def __post_init__(self):
        self.atoms = [(tuple(float(c) for c in pt), float(w)) for pt, w in self.atoms]
        for pt, _ in self.atoms:
            if len(pt) != self.grid.dim:
                raise ValueError(f"atom {pt} has the wrong dimension")
        if self.density is not None and self.density.grid.extents != self.grid.extents:
            raise ValueError("density lives on a different grid")

    @classmethod
    def dirac(cls, grid: Grid, point=None, weight: float = 1.0) -> DiscreteMeasure:
        point = (0.0,) * grid.dim if point is None else point
        return cls(grid, [(point, weight)])

    def total_variation(self) -> float:
        tv = sum(abs(w) for pt, w in self.atoms if self._inside(pt))
        if self.density is not None:
            tv += float(np.sum(np.abs(self.density.values[self.grid.mask]))) * self.grid.cell_volume
        return tv

    def _inside(self, pt) -> bool:
        idx = np.rint((np.asarray(pt) - np.asarray(self.grid.origin)) / self.grid.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.grid.extents)):
            return False
        return bool(self.grid.mask[tuple(idx)])

    def scaled(self, c: float) -> DiscreteMeasure:
        density = None if self.density is None else self.density * c
        return DiscreteMeasure(self.grid, [(pt, c * w) for pt, w in self.atoms], density)

    def ball_mass(self, center, radius: float) -> float:
        """``|mu|(B_R(center))`` with node-center membership for the density."""
        center = np.asarray(center, dtype=float)
        mass = sum(abs(w) for pt, w in self.atoms if np.linalg.norm(np.asarray(pt) - center) < radius)
        if self.density is not None:
            nodes = self.grid.ball(center, radius)
            mass += float(np.sum(np.abs(self.density.values[nodes]))) * self.grid.cell_volume
        return mass


def bump(r2):
    """Unnormalized ``exp(-1/(1-|x|^2))`` on the unit ball, from squared radius."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def mollifier_stencil(h: float, dim: int, k: int) -> np.ndarray:
    """``phi_k`` on the lattice ``h Z^dim``, scaled so that ``sum * h^dim = 1``."""
    m = int(np.ceil(1.0 / (k * h)))
    axis = h * np.arange(-m, m + 1)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    vals = bump(sum((k * x) ** 2 for x in mesh))
    return vals / (vals.sum() * h**dim)


def mollify(mu: DiscreteMeasure, k: int) -> GridFunction:
    """``f_k = mu * phi_k`` sampled on the grid, restricted to the domain mask.

    Each atom and the density are convolved with a discretely normalized
    kernel, so the discrete mass of every piece is preserved before the
    restriction to the mask; hence ``||f_k||_1 <= |mu|(Omega)``.
    """
    grid = mu.grid
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if 1.0 / k < 2 * grid.h * (1 - 1e-12):
        raise ValueError(f"mollifier radius 1/k = {1 / k} is not resolved by h = {grid.h}")
    f = np.zeros(grid.extents)
    coords = grid.coords()
    for pt, w in mu.atoms:
        if not mu._inside(pt):
            continue
        r2 = sum((k * (x - c)) ** 2 for x, c in zip(coords, pt))
        vals = bump(r2)
        # normalize on the full lattice around the atom so mass near the edge
        # of the array is not inflated
        center_idx = (np.asarray(pt) - np.asarray(grid.origin)) / grid.h
        frac = center_idx - np.floor(center_idx)
        m = int(np.ceil(1.0 / (k * grid.h))) + 1
        rng = np.arange(-m, m + 2)
        mesh = np.meshgrid(*[grid.h * (rng - fr) for fr in frac], indexing="ij")
        z = bump(sum((k * x) ** 2 for x in mesh)).sum() * grid.cell_volume
        f += w * vals / z
    if mu.density is not None:
        kern = mollifier_stencil(grid.h, grid.dim, k) * grid.cell_volume
        f += signal.fftconvolve(np.where(grid.mask, mu.density.values, 0.0), kern, mode="same")
    return GridFunction(grid, np.where(grid.mask, f, 0.0))


def measure_density_fit(mu: DiscreteMeasure, region=None, theta: float | None = None,
                        stride: int = 4, min_radius_nodes: float = 4.0):
    """Fit the density exponent in ``|mu|(B_R) <= M R^(n-theta)``.

    For each sampled center (sublattice, domain center, atoms) the masses of
    dyadic balls ``R = 2^-j in [4h, 1]`` are regressed in log-log; the
    center with the largest ``theta`` (smallest slope ``n - theta``) is
    reported. ``M`` is the smallest constant satisfying the inequality on
    every sampled ball, computed for ``theta`` if given and for the fitted
    value otherwise. Centers where some sampled ball is empty are skipped.
    """
    grid = mu.grid
    region = resolve_region(grid, region)
    if mu.total_variation() == 0:
        raise ValueError("measure has zero mass")
    radii = []
    j = 0
    while 2.0**-j >= min_radius_nodes * grid.h * (1 - 1e-12):
        radii.append(2.0**-j)
        j += 1
    if len(radii) < 2:
        raise ValueError("grid too coarse for a density fit")
    radii = np.array(radii)

    idx = np.argwhere(region)
    centroid = idx.mean(axis=0)
    anchor = idx[np.argmin(np.sum((idx - centroid) ** 2, axis=1))]
    sel = np.all((idx - anchor) % stride == 0, axis=1)
    center_idx = [tuple(i) for i in idx[sel]]
    for pt, _ in mu.atoms:
        if mu._inside(pt):
            center_idx.append(grid.nearest_index(pt))
    center_idx = sorted(set(center_idx))
    axes = grid.axes()
    centers = np.array([[axes[a][i[a]] for a in range(grid.dim)] for i in center_idx])
    # atom points themselves are used exactly, not snapped
    atom_pts = [np.asarray(pt) for pt, _ in mu.atoms if mu._inside(pt)]
    snapped = {grid.nearest_index(pt): pt for pt in atom_pts}
    for row, ci in enumerate(center_idx):
        if ci in snapped:
            centers[row] = snapped[ci]

    masses = np.zeros((len(centers), radii.size))
    if mu.density is not None:
        dens = np.abs(np.where(grid.mask, mu.density.values, 0.0)) * grid.cell_volume
        for jr, R in enumerate(radii):
            r = R / grid.h
            m = int(np.ceil(r))
            rng = np.arange(-m, m + 1)
            mesh = np.meshgrid(*([rng] * grid.dim), indexing="ij")
            kern = (sum(d.astype(float) ** 2 for d in mesh) < r * r).astype(float)
            conv = signal.fftconvolve(dens, kern, mode="same")
            masses[:, jr] = conv[tuple(np.array(center_idx).T)]
        # atom-located centers: exact node sums around the true point
        for row, ci in enumerate(center_idx):
            if ci in snapped:
                for jr, R in enumerate(radii):
                    nodes = grid.ball(centers[row], R)
                    masses[row, jr] = float(dens[nodes].sum())
    for pt, w in mu.atoms:
        if not mu._inside(pt):
            continue
        d = np.linalg.norm(centers - np.asarray(pt), axis=1)
        masses += abs(w) * (d[:, None] < radii[None, :])

    # FFT round-off leaves ~1e-16 residue on empty balls
    masses = np.where(masses > 1e-12 * mu.total_variation(), masses, 0.0)
    logR = np.log(radii)
    valid = np.all(masses > 0, axis=1)
    if not valid.any():
        raise ValueError("no sampled center sees positive mass on every ball")
    logm = np.log(masses[valid])
    xc = logR - logR.mean()
    slopes = (logm - logm.mean(axis=1, keepdims=True)) @ xc / np.dot(xc, xc)
    best_theta = float(grid.dim - slopes.min())
    th = best_theta if theta is None else theta
    M = float(np.max(masses / radii[None, :] ** (grid.dim - th)))
    return float(best_theta), M
