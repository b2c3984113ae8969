"""Monte Carlo solver for Dirichlet problems of the time-independent
Schrodinger equation (1/2) lap u - q u = 0 with piecewise-constant
nonnegative q, via a walk-on-spheres algorithm with exponential killing."""

from .estimate import Estimate, estimate_grid, estimate_point, particle_stream
from .expr import BoundaryFunction, ExprError, parse
from .geometry import (
    Ball,
    Cell,
    ConvexPolygon,
    Interval,
    PartitionError,
    PiecewiseDomain,
    contains,
    distance_to_boundary,
    project_to_boundary,
    sample_sphere,
    subdomain_index,
)
from .kernels import SurvivalQuery, bessel_i, interval_laplace, psi, survival_probability
from .oracle1d import Piecewise1DSolution, eval_1d, eval_1d_deriv, solve_1d
from .walk import (
    ABSORBED,
    KILLED,
    SolverParams,
    WalkError,
    WalkOutcome,
    gr_kwos_trajectory,
    kwos_trajectory,
    naive_trajectory,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "ABSORBED",
    "KILLED",
    "Ball",
    "BoundaryFunction",
    "Cell",
    "ConvexPolygon",
    "Estimate",
    "ExprError",
    "Interval",
    "PartitionError",
    "Piecewise1DSolution",
    "PiecewiseDomain",
    "SolverParams",
    "SurvivalQuery",
    "WalkError",
    "WalkOutcome",
    "bessel_i",
    "contains",
    "distance_to_boundary",
    "estimate_grid",
    "estimate_point",
    "eval_1d",
    "eval_1d_deriv",
    "gr_kwos_trajectory",
    "interval_laplace",
    "kwos_trajectory",
    "naive_trajectory",
    "parse",
    "particle_stream",
    "project_to_boundary",
    "psi",
    "sample_sphere",
    "simulate",
    "solve_1d",
    "subdomain_index",
    "survival_probability",
]
