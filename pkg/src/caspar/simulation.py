"""Synthetic benchmark generator, evaluation metrics, and consistency diagnostics.

The generator draws a Gaussian design and a sparse coefficient vector whose
support is a fixed number of disjoint contiguous groups placed uniformly at
random. Everything is reproducible from integer seeds; per-purpose seeds are
derived so that, for example, fold assignment draws never perturb data draws.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import CasparError, InfeasiblePlacement, SingularSupport, ZeroTruth
from .linalg import (
    CoefficientVector,
    Dataset,
    destandardize_coefficients,
    standardize as standardize_dataset,
)
from .solvers import caspar_fit, lasso_path_fit, stepwise_fit
from .structure import PredictorStructure
from .tuning import (
    DEFAULT_ALPHAS,
    DEFAULT_BANDWIDTHS,
    caspar_grid,
    grid_search,
    lasso_grid,
    make_folds,
    stepwise_grid,
)

log = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "n",
    "replicate",
    "method",
    "recovery_error",
    "tpr",
    "fpr",
    "n_selected",
    "eps",
    "h",
    "alpha",
    "seed",
)

_MAX_PLACEMENT_ATTEMPTS = 100_000


@dataclass(frozen=True)
class SimConfig:
    """Shape and magnitudes of one synthetic instance."""

    n: int
    p: int = 250
    n_groups: int = 7
    group_size: int = 5
    peak: float = 6.0
    flank: float = 3.0
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.n_groups < 1 or self.group_size < 1:
            raise ValueError("n_groups and group_size must be positive")
        if not (np.isfinite(self.peak) and np.isfinite(self.flank)):
            raise ValueError("peak and flank must be finite")
        if not (np.isfinite(self.noise_sd) and self.noise_sd >= 0):
            raise ValueError("noise_sd must be nonnegative")


@dataclass(frozen=True)
class SimInstance:
    """One generated (X, y, true beta) triple with placement metadata."""

    dataset: Dataset
    beta_true: CoefficientVector
    group_starts: tuple[int, ...]
    seed: int


def _place_groups(rng, p: int, n_groups: int, group_size: int) -> np.ndarray:
    """Uniform draw over sets of disjoint contiguous runs, by rejection."""
    top = p - group_size + 1
    for _ in range(_MAX_PLACEMENT_ATTEMPTS):
        starts = np.sort(rng.integers(0, top, size=n_groups))
        if n_groups == 1 or np.all(np.diff(starts) >= group_size):
            return starts
    raise InfeasiblePlacement(
        f"no disjoint placement of {n_groups} runs of {group_size} found "
        f"in {p} positions after {_MAX_PLACEMENT_ATTEMPTS} attempts"
    )


def simulate_instance(config: SimConfig) -> SimInstance:
    """Draw one instance: X iid standard normal, y = X beta + noise.

    The support of beta is ``n_groups`` disjoint contiguous runs of
    ``group_size`` placed uniformly at random; within each run one entry has
    magnitude ``peak`` (uniform location) and the rest have magnitude
    ``flank``; all signs are independent fair coin flips.

    Raises
    ------
    InfeasiblePlacement
        If the groups cannot fit disjointly.
    """
    if config.n_groups * config.group_size > config.p:
        raise InfeasiblePlacement(
            f"{config.n_groups} groups of {config.group_size} do not fit in p={config.p}"
        )
    rng = np.random.default_rng(config.seed)
    starts = _place_groups(rng, config.p, config.n_groups, config.group_size)
    peak_offsets = rng.integers(0, config.group_size, size=config.n_groups)
    beta = np.zeros(config.p)
    for start, offset in zip(starts, peak_offsets):
        beta[start : start + config.group_size] = config.flank
        beta[start + offset] = config.peak
    support = np.flatnonzero(beta)
    signs = rng.integers(0, 2, size=support.size) * 2 - 1
    beta[support] *= signs
    X = rng.standard_normal((config.n, config.p))
    y = X @ beta + config.noise_sd * rng.standard_normal(config.n)
    return SimInstance(
        dataset=Dataset(X, y),
        beta_true=CoefficientVector(beta),
        group_starts=tuple(int(s) for s in starts),
        seed=config.seed,
    )


def _values(beta) -> np.ndarray:
    if isinstance(beta, CoefficientVector):
        return beta.values
    return np.asarray(beta, dtype=float)


def recovery_error(beta_hat, beta_true) -> float:
    """||beta_hat - beta_true||^2 / ||beta_true||^2.

    Captures selection and estimation jointly: an all-zero estimate scores 1,
    exact recovery scores 0.
    """
    hat, true = _values(beta_hat), _values(beta_true)
    if hat.shape != true.shape:
        raise ValueError(f"shape mismatch: {hat.shape} vs {true.shape}")
    denom = float(true @ true)
    if denom == 0.0:
        raise ZeroTruth("true coefficient vector is identically zero")
    diff = hat - true
    return float(diff @ diff) / denom


def selection_rates(beta_hat, beta_true) -> tuple[float, float]:
    """(true positive rate, false positive rate), both over |supp(beta_true)|.

    The false positive count is also normalized by the true support size, so
    the two rates share a scale.
    """
    hat, true = _values(beta_hat), _values(beta_true)
    if hat.shape != true.shape:
        raise ValueError(f"shape mismatch: {hat.shape} vs {true.shape}")
    true_support = true != 0
    n_true = int(true_support.sum())
    if n_true == 0:
        raise ZeroTruth("true coefficient vector is identically zero")
    hat_support = hat != 0
    tp = int(np.count_nonzero(hat_support & true_support))
    fp = int(np.count_nonzero(hat_support & ~true_support))
    return tp / n_true, fp / n_true


def theory_diagnostics(dataset: Dataset, support, rcond: float = 1e-12) -> tuple[float, float]:
    """Incoherence and restricted-eigenvalue diagnostics for a candidate support.

    Returns ``(mu, rho)`` where ``mu`` is the largest l1 norm of the
    regression of an outside column on the support columns, and ``rho`` is
    the smallest eigenvalue of the support Gram matrix scaled by 1/n.

    Raises
    ------
    SingularSupport
        If the support columns are numerically rank-deficient.
    """
    idx = np.unique(np.asarray(list(support), dtype=int))
    if idx.size == 0:
        raise ValueError("support must be nonempty")
    if idx[0] < 0 or idx[-1] >= dataset.p:
        raise ValueError(f"support indices must lie in [0, {dataset.p})")
    sub = dataset.X[:, idx]
    gram = sub.T @ sub
    eigenvalues = np.linalg.eigvalsh(gram)
    if eigenvalues[0] <= rcond * max(eigenvalues[-1], np.finfo(float).tiny):
        raise SingularSupport(f"support {idx.tolist()} is numerically rank-deficient")
    rho = float(eigenvalues[0]) / dataset.n
    outside = np.setdiff1d(np.arange(dataset.p), idx, assume_unique=False)
    if outside.size == 0:
        return 0.0, rho
    coeffs = np.linalg.solve(gram, sub.T @ dataset.X[:, outside])
    mu = float(np.max(np.abs(coeffs).sum(axis=0)))
    return mu, rho


@dataclass(frozen=True)
class ExperimentConfig:
    """Full protocol for a method-comparison sweep over sample sizes."""

    ns: tuple[int, ...] = (50, 75, 100, 125, 150)
    replicates: int = 20
    methods: tuple[str, ...] = ("stepwise", "caspar", "lasso")
    p: int = 250
    n_groups: int = 7
    group_size: int = 5
    peak: float = 6.0
    flank: float = 3.0
    noise_sd: float = 1.0
    seed: int = 0
    n_folds: int = 10
    kernel_family: str = "boxcar"
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    bandwidths: tuple[float, ...] = DEFAULT_BANDWIDTHS
    n_epsilons: int = 20
    eps_ratio: float = 0.05
    n_lambdas: int = 20
    lambda_ratio: float = 0.01
    lasso_tol: float = 1e-5
    lasso_max_iters: int = 2000
    standardize: bool = True

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not self.ns:
            raise ValueError("ns must be nonempty")
        if not self.methods:
            raise ValueError("methods must be nonempty")


def derive_seed(root: int, *key: int) -> int:
    """A stable child seed for one (purpose, ...) stream under a root seed."""
    ss = np.random.SeedSequence([int(root), *[int(k) for k in key]])
    return int(ss.generate_state(1, np.uint32)[0])


def _tuned_fit(dataset, method, grid, plan, standardize, n_threads):
    """Grid search, then a refit on the full data at the chosen point."""
    result = grid_search(
        dataset, method, grid, plan, standardize=standardize, n_threads=n_threads
    )
    best = result.best_params
    ds_full = standardize_dataset(dataset) if standardize else dataset
    if method == "stepwise":
        values = stepwise_fit(ds_full, best, standardize=False).final.values
        chosen = {"eps": best.epsilon, "h": None, "alpha": None}
    elif method == "caspar":
        values = caspar_fit(ds_full, best, standardize=False).final.values
        chosen = {"eps": best.epsilon, "h": best.kernel.bandwidth, "alpha": best.kernel.alpha}
    else:
        down_to_best = [pt.lam for pt in grid if pt.lam >= best.lam]
        values = lasso_path_fit(
            ds_full, down_to_best, best.tol, best.max_iters, standardize=False
        ).values
        # Lasso rows report the chosen penalty in the eps column.
        chosen = {"eps": best.lam, "h": None, "alpha": None}
    slopes, _ = destandardize_coefficients(ds_full, values)
    return slopes, chosen


def run_experiment(config: ExperimentConfig, *, n_threads: int = 1) -> list[dict]:
    """Tune and evaluate every method on seeded instances over the n grid.

    Returns one row per (n, replicate, method) in deterministic order. A
    method failure on one instance is logged, its metric fields are left as
    None, and the run continues.
    """
    rows: list[dict] = []
    for n in config.ns:
        for replicate in range(config.replicates):
            data_seed = derive_seed(config.seed, n, replicate, 0)
            fold_seed = derive_seed(config.seed, n, replicate, 1)
            instance = simulate_instance(
                SimConfig(
                    n=n,
                    p=config.p,
                    n_groups=config.n_groups,
                    group_size=config.group_size,
                    peak=config.peak,
                    flank=config.flank,
                    noise_sd=config.noise_sd,
                    seed=data_seed,
                )
            )
            plan = make_folds(n, config.n_folds, fold_seed)
            dataset = instance.dataset
            structure = PredictorStructure.from_positions(np.arange(config.p))
            grids = {}
            for method in config.methods:
                if method == "stepwise":
                    grids[method] = stepwise_grid(
                        dataset,
                        n_epsilons=config.n_epsilons,
                        eps_ratio=config.eps_ratio,
                        standardize=config.standardize,
                    )
                elif method == "caspar":
                    grids[method] = caspar_grid(
                        dataset,
                        structure,
                        kernel_family=config.kernel_family,
                        alphas=config.alphas,
                        bandwidths=config.bandwidths,
                        n_epsilons=config.n_epsilons,
                        eps_ratio=config.eps_ratio,
                        standardize=config.standardize,
                    )
                elif method == "lasso":
                    grids[method] = lasso_grid(
                        dataset,
                        n_lambdas=config.n_lambdas,
                        lambda_ratio=config.lambda_ratio,
                        tol=config.lasso_tol,
                        max_iters=config.lasso_max_iters,
                        standardize=config.standardize,
                    )
                else:
                    raise ValueError(f"unknown method {method!r}")
            for method in config.methods:
                row = {
                    "n": n,
                    "replicate": replicate,
                    "method": method,
                    "recovery_error": None,
                    "tpr": None,
                    "fpr": None,
                    "n_selected": None,
                    "eps": None,
                    "h": None,
                    "alpha": None,
                    "seed": data_seed,
                }
                try:
                    slopes, chosen = _tuned_fit(
                        dataset, method, grids[method], plan, config.standardize, n_threads
                    )
                    tpr, fpr = selection_rates(slopes, instance.beta_true)
                    row.update(
                        recovery_error=recovery_error(slopes, instance.beta_true),
                        tpr=tpr,
                        fpr=fpr,
                        n_selected=int(np.count_nonzero(slopes)),
                        **chosen,
                    )
                except CasparError as exc:
                    log.warning(
                        "experiment row failed: n=%d replicate=%d method=%s: %s",
                        n,
                        replicate,
                        method,
                        exc,
                    )
                rows.append(row)
    return rows


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_results(rows) -> str:
    """Render experiment rows as a CSV document with a fixed header."""
    lines = [",".join(RESULT_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in RESULT_COLUMNS))
    return "\n".join(lines) + "\n"


def write_results(rows, path) -> None:
    """Write the experiment results table to ``path``."""
    with open(path, "w") as handle:
        handle.write(format_results(rows))


def summarize_results(rows) -> dict:
    """Mean metrics per (n, method), skipping failed rows."""
    keys = sorted({(row["n"], row["method"]) for row in rows})
    out = {}
    for key in keys:
        group = [
            r
            for r in rows
            if (r["n"], r["method"]) == key and r["recovery_error"] is not None
        ]
        out[key] = {
            "count": len(group),
            "recovery_error": float(np.mean([r["recovery_error"] for r in group])) if group else None,
            "tpr": float(np.mean([r["tpr"] for r in group])) if group else None,
            "fpr": float(np.mean([r["fpr"] for r in group])) if group else None,
            "n_selected": float(np.mean([r["n_selected"] for r in group])) if group else None,
        }
    return out
