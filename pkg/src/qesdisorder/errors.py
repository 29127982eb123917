"""Exception hierarchy shared by all numerical modules."""


class QESError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QESError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapabilityError(QESError, NotImplementedError):
    """A request is valid mathematically but beyond what is implemented."""


class AccuracyError(QESError, ArithmeticError):
    """A numerical method failed to reach its requested tolerance.

    Parameters
    ----------
    message : str
        Human readable description.
    estimate : float, optional
        Best value obtained before giving up.
    error : float, optional
        Achieved error estimate attached to ``estimate``.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class SingularRatioError(QESError, ZeroDivisionError):
    """A ratio of excess moments has a vanishing denominator."""


class WindowError(QESError, ValueError):
    """A grid window is too small for the requested evaluation."""


class ResolutionError(QESError, ArithmeticError):
    """A resolution-refinement loop did not stabilise."""

    def __init__(self, message, counts=()):
        super().__init__(message)
        self.counts = tuple(counts)


class IntegrityError(QESError, ValueError):
    """Input data violates a structural requirement (e.g. negative density)."""
