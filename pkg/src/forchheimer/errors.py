"""Exception types shared across the package."""


class ForchheimerError(Exception):
    """Base class for all package errors."""


class DomainError(ForchheimerError, ValueError):
    """An argument lies outside the domain of the operation."""


class ValidationError(ForchheimerError, ValueError):
    """A configuration or parameter set fails an admissibility condition."""


class NumericError(ForchheimerError, ArithmeticError):
    """An iterative or floating-point computation failed.

    ``bracket`` holds the last root bracket when the failure comes from a
    root solve, otherwise ``None``.
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class SolverError(NumericError):
    """The nonlinear time step did not converge."""

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step
