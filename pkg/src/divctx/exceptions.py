"""Exception types raised across the package."""


class DivctxError(Exception):
    """Base class for all package errors."""


class SchemaError(DivctxError, ValueError):
    """Malformed schema document or invalid attribute declaration."""


class ValidationError(DivctxError, ValueError):
    """A value or item does not conform to the schema."""


class FormatError(DivctxError, ValueError):
    """A line-delimited input record could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ReferentialError(DivctxError, KeyError):
    """A consultation references an item missing from the catalog."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class OrderingError(DivctxError, ValueError):
    """A stream is not sorted by timestamp."""


class DegenerateRangeError(DivctxError, ValueError):
    """A numeric attribute has fewer than two distinct observed values."""


class CalibrationError(DivctxError, ValueError):
    """No computable diversity value to calibrate the threshold from."""


class InfeasibleSplitError(DivctxError, ValueError):
    """No type/attribute assignment satisfying the overlap constraint was found."""
