"""
App/exceptions.py

Error hierarchy shared by the library and the management commands.

Every error carries the process exit code the CLI reports for it:
    1 = I/O error, 2 = validation error, 3 = numeric failure (NaN/Inf).
"""


class SubtypeLabError(Exception):
    """Base class for all errors raised by App."""

    exit_code = 1

    def __init__(self, message, *, context=None):
        super().__init__(message)
        self.context = context

    def __str__(self):
        message = super().__str__()
        if self.context:
            return f"[{self.context}] {message}"
        return message


class DataIOError(SubtypeLabError):
    """Missing, unreadable or unwritable file."""

    exit_code = 1

    def __init__(self, message, *, row=None, context=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message, context=context)
        self.row = row


class ValidationError(SubtypeLabError):
    """Input or configuration violates a module contract."""

    exit_code = 2


class ShapeError(ValidationError):
    """Tensor shape does not match what a layer or spec expects."""


class LabelError(ValidationError):
    """Unknown label, missing class, or single-class dataset."""


class NumericError(SubtypeLabError):
    """Non-finite value detected."""

    exit_code = 3
