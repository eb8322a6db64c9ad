"""Exception hierarchy shared across the package."""


class ParameterError(ValueError):
    """Raised when an argument violates a documented precondition."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine exhausts its iteration budget.

    The best iterate found so far, when available, is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NumericalError(RuntimeError):
    """Raised when NaN/Inf contaminates an iterate; carries the iteration index."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ParseError(ValueError):
    """Raised on malformed input files; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
