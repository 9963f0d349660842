"""Exception hierarchy shared by all modules."""


class GtdError(Exception):
    """Base class for every error raised by gtdkit."""


class ParseError(GtdError, ValueError):
    """Malformed fundamental-equation text.

    ``offset`` is the byte offset into the source where parsing failed.
    """

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class DomainError(GtdError, ArithmeticError):
    """Evaluation left the domain of an operation (ln of 0, division by 0, ...)."""


class CatalogError(GtdError, ValueError):
    """A system definition file is missing fields or is inconsistent."""


class DegenerateMetricError(GtdError, ArithmeticError):
    """Metric (or Jacobian) is singular or too badly conditioned to invert."""
