"""Exception types that the command line maps onto exit codes."""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (exit code 2)."""


class DataError(ValueError):
    """Unusable input data (exit code 3)."""


class ResourceLimitError(RuntimeError):
    """A guard refused an allocation that would exceed the budget (exit code 4)."""
