"""Exception hierarchy shared by the analysis modules and the CLI."""


class LHTWPAError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(LHTWPAError, ValueError):
    """A circuit or solver parameter is outside its allowed range."""


class OutOfBandError(InvalidParameterError):
    """A tone frequency lies at or beyond the line cutoff."""


class InvalidConfigurationError(InvalidParameterError):
    """Inputs are individually valid but mutually inconsistent."""


class NumericFailure(LHTWPAError, RuntimeError):
    """A numerical procedure did not converge or became unstable.

    ``partial`` optionally carries whatever result was produced before the
    failure (e.g. a truncated trajectory).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(LHTWPAError):
    """A run configuration could not be read or failed validation.

    ``where`` locates the problem: ``"line 3, column 5"`` for syntax errors
    or a dotted field path for schema violations.
    """

    def __init__(self, message, where=None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where
