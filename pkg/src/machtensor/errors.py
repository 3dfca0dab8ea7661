"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible dimensions."""


class ArgumentError(ValueError):
    """An argument is outside its valid range (mode, rank, probability...)."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations.

    ``index`` is the 0-based position of the first singular triplet that
    did not settle.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ParseError(ValueError):
    """Malformed tensor, model or measurement file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
