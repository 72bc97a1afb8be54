"""Exception hierarchy shared by every module of the package."""


class BrbsError(Exception):
    """Base class for all errors raised by :mod:`bivrbs`."""


class DomainError(BrbsError, ValueError):
    """An argument lies outside the domain of the function."""


class NumericalError(BrbsError, ArithmeticError):
    """A numerical procedure failed to reach the requested accuracy.

    Parameters
    ----------
    message : str
        Human readable description.
    residual : float, optional
        Achieved error indicator (quadrature disagreement, gradient norm, ...).
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InconsistencyError(NumericalError):
    """Two routes that must agree produced different answers."""


class ConvergenceError(NumericalError):
    """An iterative optimizer hit its iteration cap.

    ``best`` carries the best iterate found so far (natural parameter scale).
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message, residual=residual)
        self.best = best


class DegenerateSampleError(BrbsError, ValueError):
    """The sample carries no information about a parameter."""


class SampleTooSmallError(BrbsError, ValueError):
    """The sample is smaller than a procedure requires."""


class IntervalError(BrbsError, ValueError):
    """A confidence interval is unavailable or undefined."""


class ParseError(BrbsError, ValueError):
    """Malformed input data; ``row`` and ``column`` locate the offending cell (1-based)."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
