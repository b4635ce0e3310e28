"""Exception hierarchy shared by all modules."""


class MultidescentError(Exception):
    """Base class for library errors."""


class ShapeError(MultidescentError, ValueError):
    """Matrix has the wrong shape or is not symmetric."""


class DomainError(MultidescentError, ValueError):
    """A scalar parameter lies outside its domain."""


class WindowError(MultidescentError, ValueError):
    """A subset size lies outside the window where a bound is defined."""


class DegenerateError(MultidescentError, ValueError):
    """The requested quantity is undefined, e.g. k >= rank or OPT_k == 0."""


class BudgetExceeded(MultidescentError, RuntimeError):
    """Brute-force enumeration would exceed the configured budget."""


class CertificationError(MultidescentError, RuntimeError):
    """A generated lower-bound instance could not be certified."""


class ParseError(MultidescentError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(MultidescentError, ValueError):
    """Invalid experiment configuration; the message names the field."""
