"""Exception hierarchy shared by all modules."""


class SimopsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SimopsError, ValueError):
    """An argument lies outside the domain of an operation."""


class ResolutionError(SimopsError):
    """A quadrature grid is too coarse for the requested accuracy."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class StructuralError(SimopsError):
    """A structural precondition (gap, support, JB = 0, ...) is violated."""


class BudgetError(SimopsError):
    """The contraction budget of the selected variant is not satisfied."""

    def __init__(self, message, budget):
        super().__init__(message)
        self.budget = budget


class NonConvergenceError(SimopsError):
    """A fixed-point iteration diverged, stalled, or failed verification."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = list(log) if log is not None else []


class SingularityError(SimopsError):
    """A resolvent or intertwining operator is (numerically) singular."""


class OracleError(SimopsError):
    """The eigenvalue oracle failed to produce a trustworthy spectrum."""


class TruncationError(DomainError):
    """A Fourier truncation is smaller than the potential's bandwidth."""
