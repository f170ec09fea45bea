"""Exception hierarchy.

Every error carries a ``category`` used by the command-line front end to pick
an exit code: ``validation`` (2), ``numerical`` (3) or ``io`` (4).
"""
from __future__ import annotations


class FavarError(Exception):
    category = "numerical"


class ValidationError(FavarError, ValueError):
    category = "validation"

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class DimensionMismatch(ValidationError):
    pass


class InvalidRestriction(ValidationError):
    pass


class InvalidMcmcSettings(ValidationError):
    pass


class NonPositiveShape(ValidationError):
    pass


class DegenerateData(ValidationError):
    pass


class SeriesTooShort(ValidationError):
    pass


class CoverageGap(ValidationError):
    pass


class NonPositiveLevel(ValidationError):
    pass


class ZeroVariance(ValidationError):
    pass


class EmptyMonth(ValidationError):
    pass


class DegeneratePanel(ValidationError):
    pass


class BothZero(ValidationError):
    pass


class EmptyDraws(ValidationError):
    pass


class DrawMismatch(ValidationError):
    pass


class InsufficientCountries(ValidationError):
    pass


class ZeroBenchmark(FavarError):
    pass


class ZeroImpact(FavarError):
    pass


class PerfectCollinearity(FavarError):
    pass


class SingularRegression(FavarError):
    pass


class SingularPosterior(FavarError):
    pass


class FilterDivergence(FavarError):
    pass


class ExplosiveVar(FavarError):
    category = "validation"


class StuckRegion(FavarError):
    pass


class DataIOError(FavarError, OSError):
    category = "io"
