"""Exception types shared across the package."""


class InvalidParametersError(ValueError):
    pass


class OutOfDomainError(ValueError):
    """Evaluation point lies outside the certified disk or strip."""


class NumericFailure(ArithmeticError):
    """Quadrature or root finding did not converge."""

    def __init__(self, message: str, achieved_error: float | None = None):
        super().__init__(message)
        self.achieved_error = achieved_error


class InternalConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""


class SingularConfigurationError(ValueError):
    """Two bodies coincide (or are closer than the separation guard)."""

    def __init__(self, i: int, j: int, distance: float):
        super().__init__(f"bodies {i} and {j} are at distance {distance:g}")
        self.pair = (i, j)
        self.distance = distance


class NonConvergenceError(RuntimeError):
    """Fixed-point iteration of the stage equations failed."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
