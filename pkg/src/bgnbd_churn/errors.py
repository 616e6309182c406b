"""Exception hierarchy shared by the engine and the command line."""


class ChurnError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ChurnError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class UsageError(ChurnError, ValueError):
    """A caller broke an operation's preconditions (empty input, bad config)."""


class ParseError(ChurnError, ValueError):
    """Malformed input text.  ``line`` is the 1-based line number, if known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DateRangeError(ChurnError, ValueError):
    """A scoring date precedes a customer's last purchase."""


class IdentifiabilityError(ChurnError, ValueError):
    """The data cannot pin down the dropout parameters (no repeat buyers)."""


class NumericRangeError(ChurnError, ArithmeticError):
    """A float64 intermediate overflowed or underflowed."""


class ConsistencyError(ChurnError, RuntimeError):
    """An internal result violated a guaranteed bound by more than rounding."""
