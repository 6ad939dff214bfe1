"""Numerical laboratory for p-Laplace equations with measure data.

Exponent algebra, the V-map, norm estimators on masked lattices, a SOLA
solver (mollify, then minimize the regularized energy), closed-form
singular solutions and a harness of named verification experiments.
"""

from .exact import GreenFunction, radial_singular_density
from .exponents import (
    ExponentContext,
    ExponentDomainError,
    ExponentRangeError,
    Regime,
    classify_regime,
    delta_q,
    exponent_b,
    exponent_m,
    exponent_table,
    gamma_iteration,
    iterate_to_delta,
    sigma_capacitary,
    sigma_q,
    sigma_q_theta,
)
from .fitting import SlopeFit, fit_loglog
from .grid import Ball, Grid, GridFunction, GridVectorField, disk_grid, gradient, read_grid_file, square_grid, write_grid_file
from .measures import DiscreteMeasure, measure_density_fit, mollify
from .norms import (
    NormReport,
    bmo_seminorm,
    evaluate_norm,
    gagliardo_seminorm,
    lq_norm,
    marcinkiewicz_morrey_norm,
    marcinkiewicz_norm,
    morrey_norm,
    nikolski_seminorm,
    vmo_modulus,
)
from .solver import ProblemSpec, SolveReport, SolverError, sola_sequence, solve_homogeneous_on_ball, solve_regularized
from .vmap import VParams, v_apply, v_inverse

__version__ = "0.1.0"
