"""Exception types shared across the package."""

from __future__ import annotations


class CasparError(Exception):
    """Base class for every error raised by this package."""


class ConstantColumn(CasparError):
    """A design column has zero variance and cannot be standardized."""

    def __init__(self, column: int):
        self.column = int(column)
        super().__init__(f"column {self.column} is constant (zero variance)")


class SingularSupport(CasparError):
    """The restricted Gram matrix is numerically rank-deficient."""


class InvalidGraph(CasparError):
    """A graph edge list violates the distance-oracle preconditions."""


class NoConvergence(CasparError):
    """Coordinate descent exhausted its sweep budget before converging."""


class BadFoldCount(CasparError):
    """Requested fold count is outside [2, n]."""


class FoldFailure(CasparError):
    """A solver error occurred while evaluating one cross-validation fold."""

    def __init__(self, fold: int, cause: Exception):
        self.fold = int(fold)
        self.cause = cause
        super().__init__(f"fold {self.fold}: {type(cause).__name__}: {cause}")


class AllPointsFailed(CasparError):
    """Every grid point errored during grid search."""


class InfeasiblePlacement(CasparError):
    """Coefficient groups cannot be placed disjointly in the index range."""


class ZeroTruth(CasparError):
    """The true coefficient vector is identically zero."""


class ParseError(CasparError):
    """A text input file could not be parsed."""

    def __init__(self, path, line_number: int, message: str):
        self.path = str(path)
        self.line_number = int(line_number)
        super().__init__(f"{self.path}:{self.line_number}: {message}")


class DuplicateId(CasparError):
    """An identifier appears more than once in an input file."""


class LengthMismatch(CasparError):
    """Paired inputs have incompatible lengths."""


class EmptyPanel(CasparError):
    """A sequence panel contains no usable rows."""


class AllPositionsConstant(CasparError):
    """No sequence position shows any residue variation."""


class UsageError(CasparError):
    """Bad command-line invocation."""
