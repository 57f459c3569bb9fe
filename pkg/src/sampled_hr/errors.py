"""Exception hierarchy shared by every module."""


class SampledHRError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SampledHRError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParseError(DomainError):
    """A rank file row could not be parsed.

    ``line`` is the 1-based physical line number in the file.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigurationError(SampledHRError):
    """Inputs are individually valid but inconsistent with each other."""


class ComputationError(SampledHRError, ArithmeticError):
    """A numerical procedure failed (overflow, non-finite value, ...)."""


class FitError(ComputationError):
    """The shape-parameter iteration left its admissible range.

    The partial iteration history is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
