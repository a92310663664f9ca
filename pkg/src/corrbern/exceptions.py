"""Shared exception types."""


class ConfigurationError(ValueError):
    """Invalid experiment or verification configuration."""


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds a configured size cap."""
