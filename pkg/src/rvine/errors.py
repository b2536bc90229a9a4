"""Exception hierarchy shared by the library and the command-line front end."""


class RVineError(Exception):
    """Base class for all library errors."""


class DomainError(RVineError, ValueError):
    """Raised when an input lies outside the unit interval or a parameter is invalid."""


class StructureError(RVineError, ValueError):
    """Raised when a label matrix or tree sequence is not a valid R-vine.

    Parameters
    ----------
    message : str
        Human-readable diagnosis.
    condition : str
        Short tag of the violated condition (``"shape"``, ``"labels"``,
        ``"distinct"``, ``"property-i"``, ``"property-ii"``, ``"membership"``,
        ``"tree"``, ``"proximity"``).
    location : tuple of int, optional
        One-based ``(row, column)`` of the offending entry.
    """

    def __init__(self, message, condition, location=None):
        super().__init__(message)
        self.condition = condition
        self.location = location


class ConvergenceError(RVineError, ArithmeticError):
    """Raised when a numerical inversion or optimisation fails to converge."""


class FittingError(RVineError, ValueError):
    """Raised when a fit is refused (too few observations, no admissible family)."""


class InsufficientDataError(RVineError, ValueError):
    """Raised when a tail region holds too few observations for an estimate."""


class DisconnectedGraphError(RVineError, RuntimeError):
    """Raised when a spanning tree is requested on a disconnected candidate graph."""
