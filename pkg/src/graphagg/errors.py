"""Exception hierarchy shared by every module.

The CLI maps :class:`UsageError` and its subclasses to exit code 2.
"""


class GraphAggError(Exception):
    """Base class for all errors raised by graphagg."""


class UsageError(GraphAggError):
    """Bad input from the caller: unknown label, bad flag, malformed spec."""


class ParseError(UsageError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(UsageError):
    """A rule or check was configured inconsistently with the profile."""


class CapExceeded(UsageError):
    def __init__(self, what, size, limit):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(
            f"{what}: search space {size} exceeds the configured limit {limit}"
        )


class PreconditionError(GraphAggError):
    """A theorem instance was requested for inputs outside its hypotheses."""
