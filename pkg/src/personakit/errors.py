"""Shared exception types."""


class ConfigurationError(ValueError):
    """A config file or parameter combination is invalid or incomplete."""


class GateError(RuntimeError):
    """A pipeline phase was requested before its preconditions were met."""
