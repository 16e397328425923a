"""Exception types shared across the package.

Exit-code mapping used by the CLI: InvalidInputError and its subclasses
map to exit code 2, FitDiagnosticError to exit code 3.
"""


class RhemError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RhemError, ValueError):
    """Input violates a documented precondition."""


class DegenerateInputError(InvalidInputError):
    """Input is structurally valid but degenerate (e.g. constant x for a spline)."""


class UnsupportedModelError(InvalidInputError):
    """Model uses features the requested algorithm cannot handle."""


class FitDiagnosticError(RhemError, RuntimeError):
    """Raised when a fit hits a boundary or fails to converge.

    Carries the last iterate so callers can inspect partial results.
    """

    def __init__(self, message, last_coefficients=None, n_iter=None):
        super().__init__(message)
        self.last_coefficients = last_coefficients
        self.n_iter = n_iter
