"""Exception hierarchy shared by all pipeline stages.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, ConvergenceError -> 4. Everything else is a bug.
"""


class TopoctError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(TopoctError):
    """Invalid configuration value, config file, or dataset layout."""


class DataError(TopoctError):
    """Input data unusable (unreadable dataset, class emptied by skips)."""


class FormatError(DataError):
    """A file exists but does not decode as a supported image."""


class ConsistencyError(TopoctError):
    """A filtered complex violates its structural contract."""


class ConvergenceError(TopoctError):
    """An iterative solve failed to reach its tolerance."""
