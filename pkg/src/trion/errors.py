"""Exception types shared across the package."""


class TrionError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TrionError, ValueError):
    """An argument lies outside the physical/mathematical domain of an operation."""


class ConvergenceError(TrionError, RuntimeError):
    """An iterative solver failed to converge.

    Carries the last iterate so callers can inspect how far the solve got.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class SamplingError(TrionError, RuntimeError):
    """Initial-condition sampling failed (empty shell or hopeless rejection rate)."""


class InsufficientStatistics(TrionError, RuntimeError):
    """Too few trajectories of the required class to compute a statistic."""
