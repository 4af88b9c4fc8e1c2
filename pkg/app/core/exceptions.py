class SubtleError(Exception):
    """Base class for every error raised by the testing packages."""


class ValidationError(SubtleError):
    """Invalid observation, schema or parameter value.

    `row` is the 1-based data row number when the error comes from a file."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ConfigurationError(SubtleError):
    pass


class InsufficientDataError(SubtleError):
    """Not enough observations (or not enough in one arm) to proceed."""


class TerminatedTestError(SubtleError):
    """A finished sequential test was given more data."""


class NumericalError(SubtleError):
    """A numerical routine failed, e.g. quadrature did not converge."""
