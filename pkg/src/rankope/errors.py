"""Exception hierarchy.

Every error carries a CLI exit code so the command line front end can map
failures without inspecting messages.
"""


class RankOPEError(ValueError):
    exit_code = 1


class ConfigurationError(RankOPEError):
    """Invalid estimator, policy or run configuration."""

    exit_code = 2


class InvalidCurveError(ConfigurationError):
    """A position bias curve with entries outside (0, 1]."""


class DataError(RankOPEError):
    """Malformed or inconsistent logged data."""

    exit_code = 3


class InputDomainError(DataError):
    """An argument outside its valid domain, e.g. a rank past the list end."""


class SupportViolationError(RankOPEError):
    """An IPS denominator is zero: the logging policy lacks full support."""

    exit_code = 4
