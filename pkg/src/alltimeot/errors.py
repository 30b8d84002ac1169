"""Shared exception types."""


class ConfigError(ValueError):
    """A configuration value violates a contract (bad bandwidth, ladder order, ...)."""


class NonFiniteLossError(RuntimeError):
    """An optimizer encountered a non-finite loss or gradient."""
