"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class QcvError(Exception):
    """Base class for all errors raised by qcv."""


class DivisionByZero(QcvError, ZeroDivisionError):
    pass


class ExponentDenominator(QcvError, ValueError):
    """An exponent's denominator exceeds the variable's declared bound."""


class UnsupportedDenominator(QcvError):
    """A denominator does not split into binomials (1 - c*v) in the requested variable."""


class NonExpandable(QcvError):
    """A rational function cannot be expanded in the requested region."""


class Divergent(QcvError):
    """A product of formal distributions has a divergent coefficient.

    ``trace`` records the offending pair (and, when raised from a matrix
    product, the entry coordinates) so callers can report a witness.
    """

    def __init__(self, message: str, trace: dict | None = None):
        super().__init__(message)
        self.trace = dict(trace or {})


class Unsupported(QcvError):
    """The operation is well defined but outside what the calculus implements."""


class SingularPivot(QcvError):
    """Gauss decomposition met a zero or non-invertible pivot."""


class ParseError(QcvError, ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.msg = message
        self.line = line
        self.column = column
