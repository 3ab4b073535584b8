"""Fitting procedures: forward stepwise, its kernel-weighted variant, and a lasso baseline.

Both greedy procedures run the same path loop; plain stepwise is the
weighted procedure with every candidate weight pinned to one. Selection is
deterministic: argmax ties break toward the lowest column index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NoConvergence, SingularSupport
from .linalg import (
    DEFAULT_RCOND,
    CoefficientVector,
    Dataset,
    restricted_ols,
    standardize as standardize_dataset,
)
from .structure import KernelSpec, PredictorStructure

STOP_EPSILON = "epsilon"
STOP_MAX_STEPS = "max_steps"
STOP_EXHAUSTED = "exhausted"


def _check_epsilon(epsilon):
    if not (np.isfinite(epsilon) and epsilon >= 0):
        raise ValueError("epsilon must be finite and nonnegative")


def _check_max_steps(max_steps):
    if max_steps is not None and max_steps < 1:
        raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class StepwiseParams:
    """Stopping threshold (in |x^T r| units) and optional step cap.

    ``max_steps=None`` means the cap defaults to min(n - 1, p) at fit time;
    an explicit cap is clamped to that bound.
    """

    epsilon: float
    max_steps: int | None = None

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        _check_max_steps(self.max_steps)


@dataclass(frozen=True)
class CasparParams:
    """Stopping threshold plus the kernel and predictor structure."""

    epsilon: float
    kernel: KernelSpec
    structure: PredictorStructure
    max_steps: int | None = None

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        _check_max_steps(self.max_steps)


@dataclass(frozen=True)
class LassoParams:
    """Penalty level and coordinate-descent controls for the baseline."""

    lam: float
    tol: float = 1e-10
    max_iters: int = 2000

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lam must be finite and nonnegative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class FitPath:
    """Ordered trace of a greedy fit.

    ``coefficients_per_step[k]`` is the OLS refit after the (k+1)-th
    selection, so its support is contained in ``selected[: k + 1]``.
    ``chosen_correlations``/``chosen_weights`` record |x^T r| and the
    candidate weight at each accepted step. ``skipped`` lists
    ``(step, column, correlation)`` for candidates excluded at a step because
    adding the column made the restricted Gram matrix singular.
    ``column_means`` and ``column_scales`` record the transform the fit ran
    under (identity if the data were used as given).
    """

    selected: tuple[int, ...]
    coefficients_per_step: tuple[CoefficientVector, ...]
    final: CoefficientVector
    stop_reason: str
    chosen_correlations: tuple[float, ...]
    chosen_weights: tuple[float, ...]
    skipped: tuple[tuple[int, int, float], ...]
    column_means: np.ndarray
    column_scales: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.selected)


def _prepare(dataset: Dataset, standardize: bool) -> Dataset:
    if standardize and not dataset.standardized:
        return standardize_dataset(dataset)
    return dataset


def _effective_cap(max_steps, n, p) -> int:
    cap = min(n - 1, p)
    if max_steps is not None:
        cap = min(cap, max_steps)
    return cap


def _greedy_path(dataset: Dataset, epsilon, max_steps, weights_for, rcond) -> FitPath:
    """Shared greedy loop.

    ``weights_for(active)`` returns the length-p candidate weight vector for
    the current active set. Each step picks the admissible candidate
    maximizing weight * |x^T r| (ties to the lowest index), tests the
    unweighted |x^T r| of that candidate against epsilon, and refits OLS on
    the grown support.
    """
    n, p = dataset.n, dataset.p
    cap = _effective_cap(max_steps, n, p)
    active: list[int] = []
    in_model = np.zeros(p, dtype=bool)
    beta = CoefficientVector(np.zeros(p))
    per_step: list[CoefficientVector] = []
    chosen_c: list[float] = []
    chosen_w: list[float] = []
    skipped: list[tuple[int, int, float]] = []
    stop_reason = None

    while stop_reason is None:
        if len(active) >= cap:
            stop_reason = STOP_MAX_STEPS
            break
        correlations = np.abs(dataset.X.T @ (dataset.X @ beta.values - dataset.y))
        weights = weights_for(active)
        scores = np.where(in_model, -np.inf, weights * correlations)
        while True:
            candidate = int(np.argmax(scores))
            if not np.isfinite(scores[candidate]):
                stop_reason = STOP_EXHAUSTED
                break
            if correlations[candidate] < epsilon:
                stop_reason = STOP_EPSILON
                break
            try:
                trial = restricted_ols(dataset, active + [candidate], rcond=rcond)
            except SingularSupport:
                skipped.append((len(active), candidate, float(correlations[candidate])))
                scores[candidate] = -np.inf
                continue
            active.append(candidate)
            in_model[candidate] = True
            beta = trial
            per_step.append(trial)
            chosen_c.append(float(correlations[candidate]))
            chosen_w.append(float(weights[candidate]))
            break

    return FitPath(
        selected=tuple(active),
        coefficients_per_step=tuple(per_step),
        final=beta,
        stop_reason=stop_reason,
        chosen_correlations=tuple(chosen_c),
        chosen_weights=tuple(chosen_w),
        skipped=tuple(skipped),
        column_means=dataset.column_means,
        column_scales=dataset.column_scales,
    )


def stepwise_fit(
    dataset: Dataset,
    params: StepwiseParams,
    *,
    standardize: bool = True,
    rcond: float = DEFAULT_RCOND,
) -> FitPath:
    """Forward stepwise regression.

    At each step the candidate with the largest |x_i^T (X beta - y)| joins
    the model; the procedure stops when that value drops below
    ``params.epsilon``, the step cap is reached, or no admissible candidate
    remains. Candidates whose addition is numerically collinear are skipped
    for the step and recorded in the returned path.
    """
    ds = _prepare(dataset, standardize)
    ones = np.ones(ds.p)
    return _greedy_path(ds, params.epsilon, params.max_steps, lambda active: ones, rcond)


def caspar_fit(
    dataset: Dataset,
    params: CasparParams,
    *,
    standardize: bool = True,
    rcond: float = DEFAULT_RCOND,
) -> FitPath:
    """Kernel-weighted forward stepwise selection (CaSpaR).

    Candidate scores are the stepwise correlations multiplied by kernel
    weights built from distances to the active set; the first step uses
    weight one everywhere. The stopping test applies ``params.epsilon`` to
    the *unweighted* correlation of the weighted-argmax candidate, so epsilon
    has the same scale as in :func:`stepwise_fit`. With ``alpha = 1`` the
    selection sequence reduces exactly to forward stepwise.
    """
    ds = _prepare(dataset, standardize)
    if params.structure.p != ds.p:
        raise ValueError(
            f"structure covers {params.structure.p} predictors, dataset has {ds.p}"
        )
    kernel = params.kernel
    distances = params.structure.distances
    ones = np.ones(ds.p)
    base_columns: dict[int, np.ndarray] = {}

    def weights_for(active):
        # Same floats as candidate_weights(), with the per-member base kernel
        # columns cached across steps (the active set only ever grows).
        if not active:
            return ones
        for j in active:
            if j not in base_columns:
                base_columns[j] = kernel.base(distances[:, j])
        stacked = np.stack([base_columns[j] for j in sorted(active)], axis=1)
        return kernel.alpha + (1.0 - kernel.alpha) * stacked.mean(axis=1)

    return _greedy_path(ds, params.epsilon, params.max_steps, weights_for, rcond)


def _soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _cd_sweep(gram, diag, xty, gradient_state, beta, half_lam, indices) -> float:
    """One pass of coordinate updates over ``indices``.

    Covariance-mode updates: ``gradient_state`` holds gram @ beta and is
    updated incrementally, so coordinates that do not move cost O(1).
    Mutates ``beta`` and ``gradient_state``.
    """
    largest = 0.0
    for j in indices:
        dj = diag[j]
        if dj == 0.0:
            continue
        old = beta[j]
        rho = xty[j] - gradient_state[j] + dj * old
        new = _soft_threshold(rho, half_lam) / dj
        if new != old:
            gradient_state += gram[:, j] * (new - old)
            beta[j] = new
            largest = max(largest, abs(new - old))
    return largest


def _cd_solve(X, y, lam, tol, max_iters, beta0=None, gram=None, xty=None) -> np.ndarray:
    """Cyclic coordinate descent over screened working sets.

    A vectorized optimality screen picks the coordinates that can move (the
    current support plus subgradient violators); those are cycled until the
    largest coefficient change in a sweep drops below ``tol``, then the
    screen reruns to catch coordinates activated in the meantime.
    ``gram``/``xty`` may be supplied to reuse X^T X and X^T y across calls on
    the same design.
    """
    p = X.shape[1]
    gram = X.T @ X if gram is None else gram
    xty = X.T @ y if xty is None else xty
    diag = np.ascontiguousarray(np.diag(gram))
    if beta0 is None:
        beta = np.zeros(p)
        gradient_state = np.zeros(p)
    else:
        beta = np.array(beta0, dtype=float)
        gradient_state = gram @ beta
    half_lam = lam / 2.0
    sweeps = 0
    while sweeps < max_iters:
        rho = xty - gradient_state + diag * beta
        working = np.flatnonzero((np.abs(rho) > half_lam) | (beta != 0))
        if working.size == 0:
            return beta
        settled = False
        while sweeps < max_iters:
            delta = _cd_sweep(gram, diag, xty, gradient_state, beta, half_lam, working)
            sweeps += 1
            if delta < tol:
                settled = True
                break
        if settled:
            rho = xty - gradient_state + diag * beta
            if not np.any((np.abs(rho) > half_lam) & (beta == 0)):
                return beta
    raise NoConvergence(f"coordinate descent did not converge in {max_iters} sweeps")


def lasso_fit(
    dataset: Dataset,
    lam: float,
    tol: float = 1e-10,
    max_iters: int = 2000,
    *,
    standardize: bool = True,
    beta0=None,
) -> CoefficientVector:
    """Lasso baseline minimizing sum (y_i - x_i^T beta)^2 + lam * ||beta||_1.

    Cyclic coordinate descent over screened working sets; converged when a
    sweep changes no coefficient by ``tol`` or more and no coordinate outside
    the working set violates its subgradient condition. Note the un-halved
    squared loss, so the zero solution appears at ``lam >= 2 max_j |x_j^T y|``.

    Raises
    ------
    NoConvergence
        If ``max_iters`` coordinate sweeps pass without convergence.
    """
    LassoParams(lam, tol, max_iters)  # validate
    ds = _prepare(dataset, standardize)
    if beta0 is not None and np.shape(beta0) != (ds.p,):
        raise ValueError(f"beta0 must have shape ({ds.p},)")
    return CoefficientVector(_cd_solve(ds.X, ds.y, lam, tol, max_iters, beta0=beta0))


def lasso_path_fit(
    dataset: Dataset,
    lambdas,
    tol: float = 1e-10,
    max_iters: int = 2000,
    *,
    standardize: bool = True,
) -> CoefficientVector:
    """Fit the lasso at the smallest of ``lambdas`` by walking the path.

    Penalties are visited in descending order, each solution warm starting
    the next; this reaches small penalties far faster (and more reliably)
    than a cold fit. X^T X and X^T y are computed once.
    """
    lams = sorted((float(v) for v in lambdas), reverse=True)
    if not lams:
        raise ValueError("lambdas must be nonempty")
    ds = _prepare(dataset, standardize)
    gram = ds.X.T @ ds.X
    xty = ds.X.T @ ds.y
    beta = None
    for lam in lams:
        beta = _cd_solve(ds.X, ds.y, lam, tol, max_iters, beta0=beta, gram=gram, xty=xty)
    return CoefficientVector(beta)


def lambda_path(
    dataset: Dataset,
    n_lambdas: int,
    ratio: float,
    *,
    standardize: bool = True,
) -> np.ndarray:
    """Geometric penalty grid from the empty-model threshold downward.

    Runs from ``lam_max = 2 max_j |x_j^T y|`` (the smallest penalty giving an
    all-zero fit) down to ``ratio * lam_max``.
    """
    if n_lambdas < 2:
        raise ValueError("n_lambdas must be at least 2")
    if not (0.0 < ratio < 1.0):
        raise ValueError("ratio must lie in (0, 1)")
    ds = _prepare(dataset, standardize)
    lam_max = 2.0 * float(np.max(np.abs(ds.X.T @ ds.y)))
    exponents = np.arange(n_lambdas) / (n_lambdas - 1)
    return lam_max * ratio**exponents
