"""Exception types shared across the toolkit."""


class ChainLabError(Exception):
    """Base class for all toolkit errors."""


class DomainError(ChainLabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularityError(ChainLabError, ZeroDivisionError):
    """Operation hit a pole or zero denominator."""


class RangeError(ChainLabError, ValueError):
    """Argument outside a tabulated or indexed range."""


class ConfigError(ChainLabError, ValueError):
    """Invalid configuration or sampling setup.

    ``key`` names the offending configuration key when known.
    """

    def __init__(self, message, key=None):
        self.detail = message
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


class AnalysisError(ChainLabError, RuntimeError):
    """Measurement could not be made on the supplied data."""
