"""Dense least-squares primitives shared by every solver.

Active sets stay small at the problem sizes this package targets, so the
support-restricted OLS refactors a QR of the support submatrix from scratch
on every call instead of updating a factorization incrementally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ConstantColumn, SingularSupport

# Tolerance for the standardized-dataset invariant checks.
STANDARD_TOL = 1e-10

# Reciprocal-condition threshold below which a restricted Gram matrix is
# treated as rank-deficient.
DEFAULT_RCOND = 1e-12


def _frozen_array(values, dtype=float, ndim=None) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    if ndim is not None and out.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """An (n, p) design matrix, its response, and the standardization record.

    ``column_means`` and ``column_scales`` describe the affine map from the
    original (raw) column values to the stored ones:
    ``X_stored[:, j] = (X_raw[:, j] - column_means[j]) / column_scales[j]``.
    They default to the identity transform for raw data.

    Instances are immutable; the arrays are marked read-only so they can be
    shared across concurrent evaluations.
    """

    X: np.ndarray
    y: np.ndarray
    standardized: bool = False
    column_means: np.ndarray = None
    column_scales: np.ndarray = None

    def __post_init__(self):
        X = _frozen_array(self.X, ndim=2)
        y = _frozen_array(self.y, ndim=1)
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("design matrix must have at least one row and one column")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"response length {y.shape[0]} != row count {X.shape[0]}")
        if not np.all(np.isfinite(X)):
            raise ValueError("design matrix contains non-finite entries")
        if not np.all(np.isfinite(y)):
            raise ValueError("response contains non-finite entries")
        p = X.shape[1]
        means = self.column_means
        scales = self.column_scales
        means = np.zeros(p) if means is None else np.asarray(means, dtype=float)
        scales = np.ones(p) if scales is None else np.asarray(scales, dtype=float)
        if means.shape != (p,) or scales.shape != (p,):
            raise ValueError("standardization record must have one entry per column")
        if np.any(scales <= 0):
            raise ValueError("column scales must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_means", _frozen_array(means))
        object.__setattr__(self, "column_scales", _frozen_array(scales))
        if self.standardized:
            col_means = X.mean(axis=0)
            col_msq = np.mean(X * X, axis=0)
            if np.any(np.abs(col_means) > STANDARD_TOL):
                raise ValueError("standardized dataset has a column mean above tolerance")
            if np.any(np.abs(col_msq - 1.0) > STANDARD_TOL):
                raise ValueError("standardized dataset has a column second moment away from 1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class CoefficientVector:
    """A length-p coefficient vector whose support is derived from its values."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values, ndim=1)
        if not np.all(np.isfinite(values)):
            raise ValueError("coefficients contain non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def support(self) -> np.ndarray:
        """Sorted indices of the nonzero entries."""
        return np.flatnonzero(self.values)

    def __len__(self) -> int:
        return self.values.shape[0]


def standardize(dataset: Dataset) -> Dataset:
    """Scale every column to empirical mean zero and (1/n)||x_j||^2 = 1.

    The returned dataset's transform record composes with any transform
    already recorded on the input, so coefficients can always be mapped back
    to the original raw column scale.

    Raises
    ------
    ConstantColumn
        If some column has zero variance (lowest such index is reported).
    """
    X = dataset.X
    means = X.mean(axis=0)
    centered = X - means
    scales = np.sqrt(np.mean(centered * centered, axis=0))
    floor = 1e-14 * np.maximum(1.0, np.abs(means))
    degenerate = np.flatnonzero(scales <= floor)
    if degenerate.size:
        raise ConstantColumn(int(degenerate[0]))
    return Dataset(
        centered / scales,
        dataset.y,
        standardized=True,
        column_means=dataset.column_means + dataset.column_scales * means,
        column_scales=dataset.column_scales * scales,
    )


def apply_standardization(X, column_means, column_scales) -> np.ndarray:
    """Apply a recorded column transform to new raw rows."""
    X = np.asarray(X, dtype=float)
    return (X - np.asarray(column_means)) / np.asarray(column_scales)


def destandardize_coefficients(dataset: Dataset, beta) -> tuple[np.ndarray, float]:
    """Map coefficients fit on transformed columns back to the raw scale.

    Returns ``(slopes, intercept)`` with
    ``X_raw @ slopes + intercept == X_stored @ beta`` up to rounding.
    """
    values = beta.values if isinstance(beta, CoefficientVector) else np.asarray(beta, dtype=float)
    if values.shape != (dataset.p,):
        raise ValueError(f"expected {dataset.p} coefficients, got shape {values.shape}")
    slopes = values / dataset.column_scales
    intercept = -float(slopes @ dataset.column_means)
    return slopes, intercept


def _canonical_support(support, p: int) -> np.ndarray:
    idx = np.unique(np.asarray(list(support), dtype=int))
    if idx.size and (idx[0] < 0 or idx[-1] >= p):
        raise ValueError(f"support indices must lie in [0, {p})")
    return idx


def restricted_ols(dataset: Dataset, support, rcond: float = DEFAULT_RCOND) -> CoefficientVector:
    """Least squares restricted to a support set, solved via QR.

    Minimizes ||X beta - y||_2^2 subject to supp(beta) being a subset of
    ``support``. The factorization is rebuilt from the support submatrix on
    every call.

    Raises
    ------
    SingularSupport
        If the support columns are numerically rank-deficient (estimated
        reciprocal condition number at or below ``rcond``).
    """
    idx = _canonical_support(support, dataset.p)
    values = np.zeros(dataset.p)
    if idx.size == 0:
        return CoefficientVector(values)
    if idx.size > dataset.n:
        raise SingularSupport(
            f"support size {idx.size} exceeds row count {dataset.n}"
        )
    sub = dataset.X[:, idx]
    q, r = np.linalg.qr(sub)
    diag = np.abs(np.diag(r))
    largest = diag.max()
    if largest == 0.0 or diag.min() <= rcond * largest:
        raise SingularSupport(f"support {idx.tolist()} is numerically rank-deficient")
    values[idx] = solve_triangular(r, q.T @ dataset.y, check_finite=False)
    return CoefficientVector(values)


def residuals(dataset: Dataset, beta) -> np.ndarray:
    """y - X beta for a coefficient vector or plain array."""
    values = beta.values if isinstance(beta, CoefficientVector) else np.asarray(beta, dtype=float)
    return dataset.y - dataset.X @ values


def correlation_scores(dataset: Dataset, beta) -> np.ndarray:
    """Absolute inner products |x_j^T (X beta - y)| for every column j.

    On a standardized design these are proportional to the correlations
    between each column and the current residual.
    """
    values = beta.values if isinstance(beta, CoefficientVector) else np.asarray(beta, dtype=float)
    if values.shape != (dataset.p,):
        raise ValueError(f"expected {dataset.p} coefficients, got shape {values.shape}")
    return np.abs(dataset.X.T @ (dataset.X @ values - dataset.y))
