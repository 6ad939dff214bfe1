"""TOML problem configuration.

Example::

    [problem]
    p = 2.0
    s = 0.0

    [grid]
    domain = "disk"        # disk | square | box
    resolution = 128       # h = 1/resolution; or give h directly
    radius = 1.0

    [measure]
    atoms = [{point = [0.0, 0.0], weight = 1.0}]
    density_alpha = 0.5    # optional |x|^-alpha density
    density_scale = 1.0
    density_file = "mu.sgf"  # optional grid file with a density

    [solver]
    k = 32                 # mollification index; omit for function data
    tol_rel = 1e-10
    max_iter = 500

    [verify.comparison_decay]
    k = 64                 # keyword overrides passed to an experiment
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exact import radial_singular_density
from .grid import Grid, GridFunction, box_grid, disk_grid, read_grid_file, square_grid
from .measures import DiscreteMeasure
from .solver import ProblemSpec


class ConfigError(ValueError):
    pass


@dataclass
class SolverSettings:
    k: int | None = None
    tol_rel: float = 1e-10
    max_iter: int = 500


@dataclass
class RunConfig:
    spec: ProblemSpec
    solver: SolverSettings
    rhs: GridFunction | None = None
    verify: dict = field(default_factory=dict)


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _grid_from(section: dict) -> Grid:
    if "h" in section:
        h = float(section["h"])
    elif "resolution" in section:
        h = 1.0 / int(section["resolution"])
    else:
        raise ConfigError("[grid] needs 'h' or 'resolution'")
    domain = section.get("domain", "disk")
    dim = int(section.get("dim", 2))
    if domain == "disk":
        return disk_grid(h, float(section.get("radius", 1.0)), dim=dim, center=section.get("center"))
    if domain == "square":
        return square_grid(h, dim=dim)
    if domain == "box":
        try:
            return box_grid(section["lower"], section["upper"], h)
        except KeyError as exc:
            raise ConfigError("box domain needs 'lower' and 'upper'") from exc
    raise ConfigError(f"unknown domain {domain!r}")


def _measure_from(section: dict, grid: Grid, base: Path) -> DiscreteMeasure | None:
    if not section:
        return None
    atoms = [(tuple(float(x) for x in a["point"]), float(a.get("weight", 1.0))) for a in section.get("atoms", [])]
    density = None
    if "density_alpha" in section:
        density = radial_singular_density(float(section["density_alpha"]), grid,
                                          float(section.get("density_scale", 1.0))).density
    if "density_file" in section:
        loaded = read_grid_file(base / section["density_file"])
        if not isinstance(loaded, GridFunction) or loaded.values.shape != grid.extents:
            raise ConfigError("density file must hold a scalar field on the configured grid")
        extra = GridFunction(grid, loaded.values)
        density = extra if density is None else density + extra
    return DiscreteMeasure(grid, atoms, density)


def parse_config(data: dict, base=".") -> RunConfig:
    base = Path(base)
    prob = data.get("problem", {})
    if "p" not in prob:
        raise ConfigError("[problem] needs 'p'")
    grid = _grid_from(data.get("grid", {}))
    measure = _measure_from(data.get("measure", {}), grid, base)
    spec = ProblemSpec(float(prob["p"]), grid, measure, s=float(prob.get("s", 0.0)),
                       nu=float(prob.get("nu", 1.0)), L=float(prob.get("L", 1.0)))
    sv = data.get("solver", {})
    settings = SolverSettings(k=sv.get("k"), tol_rel=float(sv.get("tol_rel", 1e-10)),
                              max_iter=int(sv.get("max_iter", 500)))
    rhs = None
    if "rhs_constant" in prob:
        rhs = GridFunction(grid, np.full(grid.extents, float(prob["rhs_constant"])))
    if measure is None and rhs is None:
        raise ConfigError("configure a [measure] or problem.rhs_constant")
    if measure is not None and settings.k is None:
        raise ConfigError("measure data needs solver.k (mollification index)")
    return RunConfig(spec, settings, rhs, data.get("verify", {}))


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(load_toml(path), path.parent)
