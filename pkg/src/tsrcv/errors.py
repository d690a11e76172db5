"""Exception hierarchy.

Validation problems derive from ``ValueError`` and numerical failures from
``ArithmeticError`` so callers that do not know this package can still catch
them sensibly. The CLI maps the three families to exit codes 1, 2 and 3.
"""


class RcvError(Exception):
    """Base class for all errors raised by tsrcv."""


class ValidationError(RcvError, ValueError):
    pass


class LengthMismatch(ValidationError):
    pass


class NonMonotonicTimes(ValidationError):
    pass


class EmptySeries(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class InvalidSpacing(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class InvalidFoldCount(ValidationError):
    pass


class TimeOrderViolation(ValidationError):
    """An out-of-sample query time does not lie strictly after the training data."""


class ParseError(ValidationError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class NumericalError(RcvError, ArithmeticError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class DenominatorUnderflowWarning(RuntimeWarning):
    """Some MAPE denominators fell below the guard epsilon."""


def with_context(exc, context):
    """Return a copy of a tsrcv error with ``context`` prefixed to its message."""
    if isinstance(exc, ParseError):
        return exc
    new = type(exc)(f"{context}: {exc}")
    new.__cause__ = exc
    return new
