"""Exception hierarchy shared across the package.

Two mixin categories drive CLI exit codes: ``DataError`` (problems with the
supplied data or its shape, exit 3) and ``NumericError`` (quadrature/series
failures and numerically meaningless results, exit 4).
"""

from __future__ import annotations


class RankCovError(Exception):
    """Base class for all package errors."""


class DataError(RankCovError):
    """Data-dependent failure: bad input values, shapes, or file contents."""


class NumericError(RankCovError):
    """Numerical failure: non-convergent quadrature/series, divergent integrand.

    ``achieved`` carries the best error estimate reached before giving up,
    when one is available.
    """

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class InvalidScoreError(DataError):
    """Score function could not be evaluated on its (0,1) domain."""


class DegenerateScoreError(DataError):
    """Constant score function: A^2(phi) = 0, test statistic undefined."""


class TieError(DataError):
    """Tied values under the error-on-ties policy.

    ``tied_groups`` lists tuples of 0-based indices sharing a value; ``where``
    optionally names the column/row the ties occurred in.
    """

    def __init__(self, tied_groups: list[tuple[int, ...]], where: str | None = None):
        self.tied_groups = tied_groups
        self.where = where
        loc = f" in {where}" if where else ""
        super().__init__(f"tied values{loc} at index groups {tied_groups}")


class DimensionError(DataError):
    """Inputs with inconsistent lengths or shapes."""


class SingularDesignError(DataError):
    """Gram matrix Q_n is singular or numerically rank-deficient."""


class DegenerateDesignError(DataError):
    """All design rows identical: no regression signal to test."""


class DegenerateCovariateError(DataError):
    """Covariate ranks determine the response ranks: v_00.1 below tolerance."""


class ExactEnumerationError(DataError):
    """Exact permutation enumeration requested beyond the feasible bound."""


class SchemaError(DataError):
    """CSV schema problem: missing header or named column."""


class ParseError(DataError):
    """Non-numeric or missing cells; carries (row, column) locations."""

    def __init__(self, locations: list[tuple[int, str]]):
        self.locations = locations
        spots = ", ".join(f"row {r} column '{c}'" for r, c in locations[:10])
        more = "" if len(locations) <= 10 else f" (+{len(locations) - 10} more)"
        super().__init__(f"non-numeric or missing cell(s): {spots}{more}")


class InsufficientDataError(DataError):
    """Fewer observations than regression parameters."""
