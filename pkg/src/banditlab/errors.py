"""Exception hierarchy shared by every module."""


class BanditLabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(BanditLabError):
    """An agent, environment or experiment was wired up inconsistently."""


class DomainError(BanditLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DataError(BanditLabError, ValueError):
    """Malformed or inconsistent input data (log files, instance files)."""


class PropertyViolation(BanditLabError, AssertionError):
    """A guaranteed invariant failed on a concrete run."""


class ResourceLimitError(BanditLabError):
    """An exhaustive computation would exceed its configured cap."""
