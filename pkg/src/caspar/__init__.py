"""Clustered and sparse regression: greedy selection with kernel-weighted scores.

A forward stepwise selector whose candidate scores are reweighted by a
kernel over predictor distances, so selected predictors cluster spatially;
plus the plain stepwise and lasso baselines, cross-validation tuning, a
seeded simulation benchmark, consistency diagnostics, and a
sequence-to-design encoder.
"""

from .exceptions import (
    AllPointsFailed,
    AllPositionsConstant,
    BadFoldCount,
    CasparError,
    ConstantColumn,
    DuplicateId,
    EmptyPanel,
    FoldFailure,
    InfeasiblePlacement,
    InvalidGraph,
    LengthMismatch,
    NoConvergence,
    ParseError,
    SingularSupport,
    ZeroTruth,
)
from .ingest import (
    MutationColumn,
    SequencePanel,
    encode_panel,
    load_panel,
    read_design,
    write_design,
)
from .linalg import (
    CoefficientVector,
    Dataset,
    apply_standardization,
    correlation_scores,
    destandardize_coefficients,
    residuals,
    restricted_ols,
    standardize,
)
from .simulation import (
    ExperimentConfig,
    SimConfig,
    SimInstance,
    recovery_error,
    run_experiment,
    selection_rates,
    simulate_instance,
    summarize_results,
    theory_diagnostics,
    write_results,
)
from .solvers import (
    CasparParams,
    FitPath,
    LassoParams,
    StepwiseParams,
    caspar_fit,
    lambda_path,
    lasso_fit,
    lasso_path_fit,
    stepwise_fit,
)
from .structure import (
    KernelSpec,
    PredictorStructure,
    candidate_weights,
    pairwise_distances,
)
from .tuning import (
    CvPlan,
    GridResult,
    caspar_grid,
    cv_score,
    epsilon_grid,
    grid_search,
    lasso_grid,
    make_folds,
    stepwise_grid,
)

__version__ = "0.1.0"

__all__ = [
    "AllPointsFailed",
    "AllPositionsConstant",
    "BadFoldCount",
    "CasparError",
    "CasparParams",
    "CoefficientVector",
    "ConstantColumn",
    "CvPlan",
    "Dataset",
    "DuplicateId",
    "EmptyPanel",
    "ExperimentConfig",
    "FitPath",
    "FoldFailure",
    "GridResult",
    "InfeasiblePlacement",
    "InvalidGraph",
    "KernelSpec",
    "LassoParams",
    "LengthMismatch",
    "MutationColumn",
    "NoConvergence",
    "ParseError",
    "PredictorStructure",
    "SequencePanel",
    "SimConfig",
    "SimInstance",
    "SingularSupport",
    "StepwiseParams",
    "ZeroTruth",
    "apply_standardization",
    "candidate_weights",
    "caspar_fit",
    "caspar_grid",
    "correlation_scores",
    "cv_score",
    "destandardize_coefficients",
    "encode_panel",
    "epsilon_grid",
    "grid_search",
    "lambda_path",
    "lasso_fit",
    "lasso_grid",
    "lasso_path_fit",
    "load_panel",
    "make_folds",
    "pairwise_distances",
    "read_design",
    "recovery_error",
    "residuals",
    "restricted_ols",
    "run_experiment",
    "selection_rates",
    "simulate_instance",
    "standardize",
    "stepwise_fit",
    "stepwise_grid",
    "summarize_results",
    "theory_diagnostics",
    "write_design",
    "write_results",
]
