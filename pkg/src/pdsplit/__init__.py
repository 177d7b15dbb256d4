"""Primal-dual splitting for monotone inclusions and nonsmooth convex problems."""

from .exceptions import DimensionError, InnerSolveError, StepSizeError
from .linops import (
    DenseMatrix,
    IdentityMap,
    LinearMap,
    NormEstimate,
    compose,
    estimate_norm,
)
from .splitting import (
    ConvergenceRecord,
    SolverConfig,
    SumProblem,
    run_ahu,
    run_pd,
    run_skew,
    run_sum,
    run_sum_compositions,
    run_sum_swapped,
    solve_normal,
    validate_stepsizes,
)

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "InnerSolveError",
    "StepSizeError",
    "DenseMatrix",
    "IdentityMap",
    "LinearMap",
    "NormEstimate",
    "compose",
    "estimate_norm",
    "ConvergenceRecord",
    "SolverConfig",
    "SumProblem",
    "run_ahu",
    "run_pd",
    "run_skew",
    "run_sum",
    "run_sum_compositions",
    "run_sum_swapped",
    "solve_normal",
    "validate_stepsizes",
]
