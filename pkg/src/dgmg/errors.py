"""Exception types raised by the solver library."""


class DimensionError(ValueError):
    """Array shapes do not match the operator or grid."""


class SolverError(RuntimeError):
    """An iterative solve stagnated or broke down.

    ``history`` holds the residual norms recorded up to the failure.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class DivergenceError(SolverError):
    """A non-finite inner product was encountered."""
