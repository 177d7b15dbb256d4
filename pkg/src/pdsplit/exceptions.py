"""Exception types raised by pdsplit."""


class DimensionError(ValueError):
    """An input vector does not match the dimension an operator expects."""


class StepSizeError(ValueError):
    """Step sizes violate the convergence condition of the chosen algorithm."""


class InnerSolveError(RuntimeError):
    """An inner linear solve (conjugate gradient) failed to converge."""
