"""Numerical laboratory for the fully nonlinear Alt-Phillips free-boundary problem."""

from .operators import (
    ApParams,
    Laplacian,
    LinearTrace,
    PerturbedTrace,
    Rescaled,
    beta_of,
    ellipticity_report,
    eval_operator,
    rescaled_operator,
    rhs,
)
from .grid import HalfGrid, NodeClass, ScalarField
from .solver import SolveOptions, SolveResult, solve, solve_fully_nonlinear, solve_laplacian
from .oracle1d import Profile1D, first_integral, profile_eval, shoot

__version__ = "0.1.0"
