"""Exception types shared across the package."""


class CatsGridError(Exception):
    """Base class for all catsgrid errors."""


class DataFormatError(CatsGridError):
    """Raised when an input file cannot be parsed.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(CatsGridError):
    """Raised when a grid model, candidate merge or move is invalid."""
