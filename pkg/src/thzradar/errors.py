"""Exception types raised across the package."""


class ThzRadarError(Exception):
    """Base class for all package errors."""


class DomainError(ThzRadarError, ValueError):
    """An argument lies outside the physical domain of an operation.

    ``field`` names the offending attribute when the error comes from
    validating a value object.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class PreconditionError(ThzRadarError, ValueError):
    """A request cannot be honoured (undersampled pulse, short window, ...)."""


class FilterDesignError(ThzRadarError, ValueError):
    """A filter specification cannot be realised.

    The message names the violated constraint.
    """

    def __init__(self, constraint, message):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


class StateError(ThzRadarError):
    """A radargram is in the wrong processing state for the requested step."""


class ConfigError(ThzRadarError, ValueError):
    """Scene-file syntax or semantic error.

    ``line`` is set for syntax errors, ``field`` for invariant violations.
    """

    def __init__(self, message, line=None, field=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field
