"""k-fold cross-validation and grid search over solver parameters.

Grid search exploits one structural fact about the greedy solvers: for a
fixed kernel configuration the selection path does not depend on the
stopping threshold, which only truncates it. All threshold grid points that
share a kernel configuration are therefore evaluated from a single path fit
per fold, reproducing the independently fitted results exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import AllPointsFailed, BadFoldCount, CasparError, FoldFailure
from .linalg import (
    DEFAULT_RCOND,
    Dataset,
    apply_standardization,
    standardize as standardize_dataset,
)
from .solvers import (
    CasparParams,
    LassoParams,
    StepwiseParams,
    _cd_solve,
    caspar_fit,
    lambda_path,
    lasso_fit,
    stepwise_fit,
)
from .structure import KernelSpec, PredictorStructure

METHODS = ("stepwise", "caspar", "lasso")

DEFAULT_ALPHAS = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_BANDWIDTHS = (1.0, 2.0, 3.0, 4.0)


@dataclass(frozen=True)
class CvPlan:
    """A deterministic fold assignment: seeded shuffle, then round robin."""

    n_folds: int
    seed: int
    assignment: np.ndarray

    def __post_init__(self):
        assignment = np.array(self.assignment, dtype=int)
        assignment.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)
        sizes = np.bincount(assignment, minlength=self.n_folds)
        if assignment.min(initial=0) < 0 or assignment.max(initial=0) >= self.n_folds:
            raise ValueError("fold labels must lie in [0, n_folds)")
        if sizes.min() < 1 or sizes.max() - sizes.min() > 1:
            raise ValueError("fold sizes must differ by at most one")

    @property
    def n(self) -> int:
        return self.assignment.shape[0]


def make_folds(n: int, n_folds: int, seed: int) -> CvPlan:
    """Partition {0, ..., n-1} into folds whose sizes differ by at most one.

    The assignment is a pure function of ``(n, n_folds, seed)``.

    Raises
    ------
    BadFoldCount
        If ``n_folds`` is outside ``[2, n]``.
    """
    if not 2 <= n_folds <= n:
        raise BadFoldCount(f"n_folds must lie in [2, {n}], got {n_folds}")
    order = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[order] = np.arange(n) % n_folds
    return CvPlan(n_folds=n_folds, seed=seed, assignment=assignment)


def _check_method(method: str):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def _fold_data(dataset: Dataset, plan: CvPlan, fold: int, standardize: bool):
    """Split one fold off; standardization statistics come from training rows only."""
    if plan.n != dataset.n:
        raise ValueError(f"plan covers {plan.n} rows, dataset has {dataset.n}")
    test_mask = plan.assignment == fold
    ds_train = Dataset(dataset.X[~test_mask], dataset.y[~test_mask])
    X_test = dataset.X[test_mask]
    if standardize:
        ds_train = standardize_dataset(ds_train)
        X_test = apply_standardization(X_test, ds_train.column_means, ds_train.column_scales)
    return ds_train, X_test, dataset.y[test_mask]


def _fit_values(ds_train: Dataset, method: str, params, rcond: float) -> np.ndarray:
    if method == "stepwise":
        return stepwise_fit(ds_train, params, standardize=False, rcond=rcond).final.values
    if method == "caspar":
        return caspar_fit(ds_train, params, standardize=False, rcond=rcond).final.values
    return lasso_fit(
        ds_train, params.lam, params.tol, params.max_iters, standardize=False
    ).values


def _point_fold_mse(fold_data, method: str, params, rcond: float) -> float:
    ds_train, X_test, y_test = fold_data
    pred = X_test @ _fit_values(ds_train, method, params, rcond)
    diff = y_test - pred
    return float(np.mean(diff * diff))


def cv_score(
    dataset: Dataset,
    method: str,
    params,
    plan: CvPlan,
    *,
    standardize: bool = True,
    rcond: float = DEFAULT_RCOND,
) -> float:
    """Mean over folds of the held-out mean squared prediction error.

    Each fold is fit on the complementary rows; with ``standardize`` the
    column transform is recomputed from the training rows and applied to the
    held-out rows, so no held-out statistics leak into the fit.

    Raises
    ------
    FoldFailure
        Wrapping any solver error, tagged with the failing fold.
    """
    _check_method(method)
    mses = []
    for fold in range(plan.n_folds):
        try:
            fd = _fold_data(dataset, plan, fold, standardize)
            mses.append(_point_fold_mse(fd, method, params, rcond))
        except CasparError as exc:
            raise FoldFailure(fold, exc) from exc
    return float(np.mean(mses))


@dataclass(frozen=True)
class GridResult:
    """Per-point cross-validation errors and the chosen grid point.

    ``fold_errors`` is (n_points, n_folds) with NaN rows for failed points;
    the chosen point minimizes the mean error, ties resolving to the first
    point in grid order.
    """

    method: str
    grid: tuple
    fold_errors: np.ndarray
    mean_errors: np.ndarray
    best_index: int
    failures: tuple[tuple[int, int, str], ...]

    @property
    def best_params(self):
        return self.grid[self.best_index]

    @property
    def best_score(self) -> float:
        return float(self.mean_errors[self.best_index])


def _greedy_group_key(method: str, params):
    if method == "stepwise":
        return (params.max_steps,)
    if params.kernel.alpha == 1.0:
        # Every weight is exactly one: the path is the same for any kernel.
        return ("alpha-one", params.max_steps)
    return (params.kernel, id(params.structure), params.max_steps)


def _per_step_min_considered(path) -> np.ndarray:
    """Smallest correlation examined at each accepted step.

    A step's stopping test fires whenever any candidate examined during it
    (skipped or accepted) falls below the threshold, so truncating a shared
    path needs the per-step minimum over examined candidates.
    """
    mins = np.asarray(path.chosen_correlations, dtype=float).copy()
    for step, _column, corr in path.skipped:
        if step < mins.shape[0]:
            mins[step] = min(mins[step], corr)
    return mins


def _lasso_fold_mses(fold_data, grid):
    """Evaluate the whole penalty grid on one fold, warm starting down the path.

    Points are solved in descending-penalty order (each solution seeds the
    next) with X^T X and X^T y computed once, then reported back in grid
    order. Scores match independently fitted ones up to the coordinate
    descent tolerance. A point that fails to converge gets NaN and the next
    point restarts cold.
    """
    ds_train, X_test, y_test = fold_data
    gram = ds_train.X.T @ ds_train.X
    xty = ds_train.X.T @ ds_train.y
    order = sorted(range(len(grid)), key=lambda i: -grid[i].lam)
    out = [np.nan] * len(grid)
    errors: list[tuple[int, str]] = []
    warm = None
    for i in order:
        pt = grid[i]
        try:
            beta = _cd_solve(
                ds_train.X, ds_train.y, pt.lam, pt.tol, pt.max_iters,
                beta0=warm, gram=gram, xty=xty,
            )
        except CasparError as exc:
            errors.append((i, str(exc)))
            warm = None
            continue
        warm = beta
        diff = y_test - X_test @ beta
        out[i] = float(np.mean(diff * diff))
    return out, errors


def _greedy_group_mses(fold_data, method, grid, point_indices, rcond):
    """Evaluate every epsilon in one kernel-configuration group from one path fit."""
    ds_train, X_test, y_test = fold_data
    points = [grid[i] for i in point_indices]
    eps_run = min(pt.epsilon for pt in points)
    fit = stepwise_fit if method == "stepwise" else caspar_fit
    path = fit(ds_train, replace(points[0], epsilon=eps_run), standardize=False, rcond=rcond)
    step_min = _per_step_min_considered(path)
    mse_at_step: dict[int, float] = {}
    out = []
    for pt in points:
        crossed = np.flatnonzero(step_min < pt.epsilon)
        m = int(crossed[0]) if crossed.size else path.n_steps
        if m not in mse_at_step:
            if m == 0:
                diff = y_test
            else:
                diff = y_test - X_test @ path.coefficients_per_step[m - 1].values
            mse_at_step[m] = float(np.mean(diff * diff))
        out.append(mse_at_step[m])
    return out


def grid_search(
    dataset: Dataset,
    method: str,
    grid,
    plan: CvPlan,
    *,
    standardize: bool = True,
    rcond: float = DEFAULT_RCOND,
    n_threads: int = 1,
) -> GridResult:
    """Evaluate the cross-validation score at every grid point and pick the argmin.

    The result is independent of evaluation order and of ``n_threads``; work
    units are merged by grid position, never by completion order. Greedy
    grid points sharing a kernel configuration are evaluated from one path
    fit per fold and match per-point :func:`cv_score` values exactly; lasso
    points are solved down a warm-started penalty path per fold and match up
    to the coordinate-descent tolerance. Points whose evaluation errors are
    recorded in ``failures`` and excluded from the argmin.

    Raises
    ------
    AllPointsFailed
        If no grid point produced a score.
    """
    _check_method(method)
    grid = tuple(grid)
    if not grid:
        raise ValueError("grid must contain at least one point")

    folds: list = []
    for fold in range(plan.n_folds):
        try:
            folds.append(_fold_data(dataset, plan, fold, standardize))
        except CasparError as exc:
            folds.append(exc)

    errors = np.full((len(grid), plan.n_folds), np.nan)
    failures: list[tuple[int, int, str]] = []

    if method in ("stepwise", "caspar"):
        groups: dict = {}
        for i, pt in enumerate(grid):
            groups.setdefault(_greedy_group_key(method, pt), []).append(i)
        group_list = list(groups.values())

        def run(task):
            gi, fold = task
            if isinstance(folds[fold], CasparError):
                return folds[fold]
            try:
                return _greedy_group_mses(folds[fold], method, grid, group_list[gi], rcond)
            except CasparError as exc:
                return exc

        tasks = [(gi, fold) for gi in range(len(group_list)) for fold in range(plan.n_folds)]
        for (gi, fold), res in zip(tasks, _run_tasks(run, tasks, n_threads)):
            if isinstance(res, Exception):
                failures.extend((pi, fold, str(res)) for pi in group_list[gi])
            else:
                for pi, mse in zip(group_list[gi], res):
                    errors[pi, fold] = mse
    else:

        def run(fold):
            if isinstance(folds[fold], CasparError):
                return folds[fold]
            return _lasso_fold_mses(folds[fold], grid)

        tasks = list(range(plan.n_folds))
        for fold, res in zip(tasks, _run_tasks(run, tasks, n_threads)):
            if isinstance(res, Exception):
                failures.extend((pi, fold, str(res)) for pi in range(len(grid)))
            else:
                mses, point_errors = res
                errors[:, fold] = mses
                failures.extend((pi, fold, msg) for pi, msg in point_errors)

    with np.errstate(invalid="ignore"):
        means = errors.mean(axis=1)
    ok = np.isfinite(means)
    if not ok.any():
        raise AllPointsFailed("every grid point failed during cross-validation")
    best = int(np.flatnonzero(ok)[np.argmin(means[ok])])
    errors.setflags(write=False)
    means.setflags(write=False)
    return GridResult(
        method=method,
        grid=grid,
        fold_errors=errors,
        mean_errors=means,
        best_index=best,
        failures=tuple(sorted(failures)),
    )


def _run_tasks(run, tasks, n_threads):
    if n_threads and n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(run, tasks))
    return [run(task) for task in tasks]


def epsilon_grid(
    dataset: Dataset,
    n_epsilons: int = 20,
    ratio: float = 0.05,
    *,
    standardize: bool = True,
) -> np.ndarray:
    """Geometric stopping-threshold grid, data driven.

    Runs from ``max_j |x_j^T y|`` down to ``ratio`` times that value.
    """
    if n_epsilons < 2:
        raise ValueError("n_epsilons must be at least 2")
    if not (0.0 < ratio < 1.0):
        raise ValueError("ratio must lie in (0, 1)")
    ds = standardize_dataset(dataset) if standardize and not dataset.standardized else dataset
    top = float(np.max(np.abs(ds.X.T @ ds.y)))
    return top * ratio ** (np.arange(n_epsilons) / (n_epsilons - 1))


def stepwise_grid(
    dataset: Dataset,
    *,
    epsilons=None,
    n_epsilons: int = 20,
    eps_ratio: float = 0.05,
    max_steps: int | None = None,
    standardize: bool = True,
) -> list[StepwiseParams]:
    """Stopping-threshold grid for the plain stepwise solver."""
    if epsilons is None:
        epsilons = epsilon_grid(dataset, n_epsilons, eps_ratio, standardize=standardize)
    return [StepwiseParams(float(e), max_steps) for e in epsilons]


def caspar_grid(
    dataset: Dataset,
    structure: PredictorStructure,
    *,
    kernel_family: str = "boxcar",
    alphas=DEFAULT_ALPHAS,
    bandwidths=DEFAULT_BANDWIDTHS,
    epsilons=None,
    n_epsilons: int = 20,
    eps_ratio: float = 0.05,
    max_steps: int | None = None,
    standardize: bool = True,
) -> list[CasparParams]:
    """(epsilon, bandwidth, alpha) grid in deterministic alpha/bandwidth/epsilon order."""
    if epsilons is None:
        epsilons = epsilon_grid(dataset, n_epsilons, eps_ratio, standardize=standardize)
    return [
        CasparParams(float(e), KernelSpec(kernel_family, float(h), float(a)), structure, max_steps)
        for a in alphas
        for h in bandwidths
        for e in epsilons
    ]


def lasso_grid(
    dataset: Dataset,
    *,
    lambdas=None,
    n_lambdas: int = 20,
    lambda_ratio: float = 0.01,
    tol: float = 1e-5,
    max_iters: int = 2000,
    standardize: bool = True,
) -> list[LassoParams]:
    """Penalty grid for the lasso baseline, largest penalty first."""
    if lambdas is None:
        lambdas = lambda_path(dataset, n_lambdas, lambda_ratio, standardize=standardize)
    return [LassoParams(float(lam), tol, max_iters) for lam in lambdas]
