"""Exception hierarchy shared by the package.

The CLI maps these to exit codes: input problems exit with 2, numerical
failures with 3, and exhaustive-size limits with 4.
"""


class SveaError(Exception):
    """Base class for errors raised by this package."""


class InputError(SveaError, ValueError):
    """Bad user input: malformed data, out-of-range arguments."""


class NumericalError(SveaError, ArithmeticError):
    """A computation produced a value that violates a guaranteed bound."""


class SizeLimitError(SveaError):
    """The request needs an exhaustive computation that is too large."""
