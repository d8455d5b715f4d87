"""Exception hierarchy.

Input and configuration problems derive from ``ValueError`` and computational
failures from ``RuntimeError`` / ``ArithmeticError`` so callers can separate
the two without importing anything from this module.
"""
from __future__ import annotations


class CorrxError(Exception):
    """Base class for all package errors."""


# -- input / configuration ---------------------------------------------------


class DataError(CorrxError, ValueError):
    """Malformed or inconsistent input data."""


class UnreadableFileError(DataError):
    pass


class UnparseableDateError(DataError):
    pass


class DuplicateDateError(DataError):
    pass


class RaggedRowError(DataError):
    pass


class MissingValueError(DataError):
    pass


class NonPositivePriceError(DataError):
    pass


class OverlappingIntervalsError(DataError):
    pass


class DateMismatchError(DataError):
    pass


class EmptyIntersectionError(DataError):
    pass


class ZeroVarianceError(DataError):
    pass


class SpecError(CorrxError, ValueError):
    """Model specification that cannot be realised on the given data."""


class InvalidParameterError(CorrxError, ValueError):
    """Parameters outside the admissible region."""


# -- computation ---------------------------------------------------------------


class EstimationError(CorrxError, RuntimeError):
    """Optimisation failed to produce an acceptable estimate."""


class NotPositiveDefiniteError(CorrxError, ArithmeticError):
    """A filtered quasi-correlation or covariance matrix lost positive definiteness.

    Attributes
    ----------
    t : int
        Zero-based time index of the first offending matrix.
    """

    def __init__(self, t: int, detail: str = "") -> None:
        self.t = int(t)
        self.detail = detail
        msg = f"matrix not positive definite at t={self.t}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
