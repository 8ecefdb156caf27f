"""Atangana-Baleanu fractional calculus, an implicit sub-diffusion solver and
an executable check harness for its extremum and maximum principles."""

from .errors import (
    AbsubdiffError,
    ConfigError,
    ConvergenceError,
    DomainError,
    GridMismatchError,
    MLOverflowError,
    PreconditionError,
    SingularSystemError,
    SolverError,
)
from .fracops import (
    M_ALPHA,
    FracOrder,
    SampledFunction,
    TimeGrid,
    ab_derivative,
    ab_derivative_alt,
    ab_integral,
    check_inversion,
    rl_derivative,
    rl_integral,
)
from .mlf import MlParams, mittag_leffler, ml_eval, ml_primitive
from .report import CheckReport, Hypothesis
from .solver import Field, ProblemSpec, SolverConfig, SpaceTimeGrid, residual, solve

__version__ = "0.1.0"

__all__ = [
    "AbsubdiffError",
    "CheckReport",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "Field",
    "FracOrder",
    "GridMismatchError",
    "Hypothesis",
    "M_ALPHA",
    "MLOverflowError",
    "MlParams",
    "PreconditionError",
    "ProblemSpec",
    "SampledFunction",
    "SingularSystemError",
    "SolverConfig",
    "SolverError",
    "SpaceTimeGrid",
    "TimeGrid",
    "ab_derivative",
    "ab_derivative_alt",
    "ab_integral",
    "check_inversion",
    "mittag_leffler",
    "ml_eval",
    "ml_primitive",
    "residual",
    "rl_derivative",
    "rl_integral",
    "solve",
]
