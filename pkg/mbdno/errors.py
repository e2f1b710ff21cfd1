class MbdnoException(Exception):
    """Base class of all errors raised by mbdno."""


class ValidationError(MbdnoException):
    """Invalid parameters, configuration, shapes or file contents."""


class NumericalAbort(MbdnoException):
    """A computation diverged or produced non-finite values."""
