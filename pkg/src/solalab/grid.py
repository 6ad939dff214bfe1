"""Masked uniform lattices, sampled functions, nodal gradients and file I/O."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

_MAGIC = b"SGF1"


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform lattice ``origin + h * index`` with a boolean domain mask.

    Arrays on the grid are indexed ``[i0, i1, ...]`` with axis 0 the first
    coordinate (``indexing='ij'``).
    """

    origin: tuple[float, ...]
    h: float
    extents: tuple[int, ...]
    mask: np.ndarray

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"spacing must be positive, got {self.h}")
        if len(self.extents) not in (2, 3) or len(self.origin) != len(self.extents):
            raise ValueError("grids are 2-D or 3-D with matching origin and extents")
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        if mask.shape != tuple(self.extents):
            raise ValueError(f"mask shape {mask.shape} does not match extents {self.extents}")
        if not mask.any():
            raise ValueError("mask selects no nodes")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def axes(self):
        return [o + self.h * np.arange(e) for o, e in zip(self.origin, self.extents)]

    def coords(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def radius(self, center=None):
        center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        return np.sqrt(sum((x - c) ** 2 for x, c in zip(self.coords(), center)))

    def ball(self, center, radius: float) -> np.ndarray:
        """Masked nodes with ``|x - center| < radius``."""
        return (self.radius(center) < radius) & self.mask

    def nearest_index(self, point) -> tuple[int, ...]:
        idx = np.rint((np.asarray(point, dtype=float) - np.asarray(self.origin)) / self.h).astype(int)
        return tuple(int(np.clip(i, 0, e - 1)) for i, e in zip(idx, self.extents))

    def with_mask(self, mask) -> Grid:
        return Grid(self.origin, self.h, self.extents, mask)

    def dirichlet_layer(self, mask=None) -> np.ndarray:
        """Outermost layer of ``mask``: nodes with a lattice neighbour (incl. diagonals) outside it."""
        mask = self.mask if mask is None else mask
        return mask & ~interior_nodes(mask)


def interior_nodes(mask) -> np.ndarray:
    structure = np.ones((3,) * mask.ndim, dtype=bool)
    return ndimage.binary_erosion(mask, structure=structure, border_value=0)


def box_grid(lower, upper, h: float, mask=None) -> Grid:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    extents = tuple(int(round(e)) + 1 for e in (upper - lower) / h)
    if mask is None:
        mask = np.ones(extents, dtype=bool)
    return Grid(tuple(lower), h, extents, mask)


def square_grid(h: float, dim: int = 2) -> Grid:
    """Unit square (cube) ``[0, 1]^dim``."""
    return box_grid(np.zeros(dim), np.ones(dim), h)


def disk_grid(h: float, radius: float = 1.0, dim: int = 2, center=None) -> Grid:
    """Ball of given radius; a node belongs to the domain iff its center lies inside."""
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    g = box_grid(center - radius, center + radius, h)
    return g.with_mask(g.radius(center) < radius)


@dataclass(eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.extents:
            raise ValueError(f"values shape {values.shape} does not match grid {self.grid.extents}")
        if not np.all(np.isfinite(values[self.grid.mask])):
            raise ValueError("grid function has non-finite values on the mask")
        values[~self.grid.mask] = 0.0
        self.values = values

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        other_vals = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values + other_vals)

    def __sub__(self, other):
        other_vals = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values - other_vals)


@dataclass(eq=False)
class GridVectorField:
    grid: Grid
    values: np.ndarray  # shape (ncomp, *extents)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape[1:] != self.grid.extents:
            raise ValueError(f"values shape {values.shape} does not match grid {self.grid.extents}")
        if not np.all(np.isfinite(values[:, self.grid.mask])):
            raise ValueError("vector field has non-finite values on the mask")
        values[:, ~self.grid.mask] = 0.0
        self.values = values

    def abs(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))

    def magnitude(self) -> GridFunction:
        return GridFunction(self.grid, self.abs())

    def __mul__(self, c):
        return GridVectorField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __sub__(self, other):
        return GridVectorField(self.grid, self.values - other.values)


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    def nodes(self, grid: Grid) -> np.ndarray:
        return grid.ball(self.center, self.radius)


def gradient(f: GridFunction) -> GridVectorField:
    """Central differences where both axial neighbours are in the mask, one-sided otherwise."""
    grid = f.grid
    if grid.mask.sum() < 2:
        raise ValueError("gradient needs at least two masked nodes")
    mask = np.pad(grid.mask, 1, constant_values=False)
    u = np.pad(f.values, 1)
    core = tuple(slice(1, -1) for _ in range(grid.dim))
    comps = []
    for ax in range(grid.dim):
        fwd = [slice(1, -1)] * grid.dim
        bwd = [slice(1, -1)] * grid.dim
        fwd[ax] = slice(2, None)
        bwd[ax] = slice(0, -2)
        fwd, bwd = tuple(fwd), tuple(bwd)
        has_f = mask[fwd] & grid.mask
        has_b = mask[bwd] & grid.mask
        d = np.zeros(grid.extents)
        both = has_f & has_b
        d[both] = (u[fwd] - u[bwd])[both] / (2 * grid.h)
        only_f = has_f & ~has_b
        d[only_f] = (u[fwd] - u[core])[only_f] / grid.h
        only_b = has_b & ~has_f
        d[only_b] = (u[core] - u[bwd])[only_b] / grid.h
        comps.append(d)
    return GridVectorField(grid, np.stack(comps))


def write_grid_file(path, field) -> None:
    """Write a scalar or vector grid field.

    Layout (little-endian): ``b"SGF1"``, uint8 dim, uint8 ncomp, 2 pad bytes,
    dim x uint64 extents, float64 h, dim x float64 origin, then
    ncomp x prod(extents) float64 values (component-major, row-major per
    component), then the mask as little-endian-bit-ordered packed bytes.
    """
    grid = field.grid
    values = field.values if isinstance(field, GridVectorField) else field.values[None]
    header = struct.pack("<4sBB2x", _MAGIC, grid.dim, values.shape[0])
    header += struct.pack(f"<{grid.dim}Q", *grid.extents)
    header += struct.pack("<d", grid.h)
    header += struct.pack(f"<{grid.dim}d", *grid.origin)
    with open(Path(path), "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
        fh.write(np.packbits(grid.mask.ravel(), bitorder="little").tobytes())


def read_grid_file(path):
    data = Path(path).read_bytes()
    magic, dim, ncomp = struct.unpack_from("<4sBB2x", data, 0)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a grid field file")
    off = 8
    extents = struct.unpack_from(f"<{dim}Q", data, off)
    off += 8 * dim
    (h,) = struct.unpack_from("<d", data, off)
    off += 8
    origin = struct.unpack_from(f"<{dim}d", data, off)
    off += 8 * dim
    size = int(np.prod(extents))
    values = np.frombuffer(data, dtype="<f8", count=ncomp * size, offset=off)
    off += 8 * ncomp * size
    bits = np.frombuffer(data, dtype=np.uint8, offset=off)
    mask = np.unpackbits(bits, count=size, bitorder="little").astype(bool).reshape(extents)
    grid = Grid(origin, h, extents, mask)
    values = values.reshape((ncomp,) + tuple(extents))
    if ncomp == 1:
        return GridFunction(grid, values[0])
    return GridVectorField(grid, values)
