"""
Exception types raised by the qhm_metric library.
"""


class QHMError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class DomainError(QHMError, ValueError):
    """Raised for inputs outside an operation's domain (non-finite points, zero vectors)."""
    pass


class ConfigurationError(QHMError):
    """Raised when parameters, truncations, files or shapes do not fit together."""
    pass


class CapabilityError(QHMError):
    """Raised when an element lacks what an operation needs (e.g. analytic partials)."""
    pass


class PreconditionError(QHMError):
    """Raised when an operation's documented precondition is violated."""
    pass


class NumericalConvergenceError(QHMError):
    """Raised when an iterative method hits its iteration cap."""

    exit_code = 3

    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations
