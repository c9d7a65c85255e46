"""Exception types shared across the package.

The CLI maps these onto stable exit codes: ConfigError -> 2,
DataFormatError -> 3. Statistical-test failures are not exceptions.
"""


class RtnLabError(Exception):
    """Base class for rtnlab errors."""


class ConfigError(RtnLabError):
    """Invalid configuration or parameter combination."""


class DataFormatError(RtnLabError):
    """Malformed or truncated data file."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class AnalysisError(RtnLabError):
    """Data-dependent analysis failure (degenerate fit, unresolvable levels, ...)."""
