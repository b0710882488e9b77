"""Exception types raised by the mechanisms and their helpers."""


class EmptyDataError(ValueError):
    """Raised when a dataset has no rows."""


class BoundViolationError(ValueError):
    """Raised when a data row falls outside its declared bounds.

    ``row`` is the zero-based index of the first offending row.
    """

    def __init__(self, message, row):
        super().__init__(message)
        self.row = row


class NonDifferentiablePointError(ArithmeticError):
    """Raised when a gradient is requested at a point where none exists."""


class UnsupportedOperationError(TypeError):
    """Raised when an objective does not provide the requested quantity."""


class SingularSystemError(ArithmeticError):
    """Raised when a least-squares system is rank deficient."""


class SamplingError(RuntimeError):
    """Raised when an MCMC chain never accepts a proposal."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OptimizationError(RuntimeError):
    """Raised when an iterative solver stops before reaching its tolerance."""

    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap
