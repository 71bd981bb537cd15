"""Exception types shared across the solver stack."""


class SolverError(Exception):
    """Base class for all library errors."""


class InvalidParameter(SolverError, ValueError):
    """A scalar or structural parameter violates its contract."""


class InvalidInput(SolverError, ValueError):
    """A user-supplied point, multiplier, or config fails validation."""


class NumericalFailure(SolverError, ArithmeticError):
    """An oracle produced a non-finite value or a guaranteed identity broke."""


class MissingConstant(SolverError, KeyError):
    """A bound formula needs a constant that was not supplied."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"missing constant: {self.name}"


class NotFound(SolverError, KeyError):
    """Unknown registry name."""


class FeasibilityNotFound(SolverError):
    """The near-feasible point finder hit its cap; carries the best point."""

    def __init__(self, message, x=None, violation=None):
        super().__init__(message)
        self.x = x
        self.violation = violation


class IterationLimitExceeded(SolverError):
    """A safeguard cap was hit; carries the best point seen so far."""

    def __init__(self, message, x=None, y=None, residual=None, trace=None):
        super().__init__(message)
        self.x = x
        self.y = y
        self.residual = residual
        self.trace = trace
