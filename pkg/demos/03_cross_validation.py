"""Tuning the three parameters by 10-fold cross-validation grid search.

Run:  python demos/03_cross_validation.py
"""

import numpy as np

from caspar import (
    PredictorStructure,
    SimConfig,
    caspar_grid,
    grid_search,
    make_folds,
    simulate_instance,
    stepwise_grid,
)

instance = simulate_instance(SimConfig(n=60, p=120, n_groups=3, group_size=5, seed=4))
dataset = instance.dataset
structure = PredictorStructure.from_positions(np.arange(dataset.p))
plan = make_folds(dataset.n, 10, seed=99)

# Grid over (epsilon, bandwidth, alpha); epsilon is data driven, the other
# two axes are small integer menus. alpha = 1 rows reproduce plain stepwise,
# so the search can never do worse than stepwise on its own criterion.
grid = caspar_grid(
    dataset,
    structure,
    alphas=(0.1, 0.3, 0.5, 1.0),
    bandwidths=(1.0, 2.0, 3.0),
    n_epsilons=10,
)
print(f"evaluating {len(grid)} grid points on {plan.n_folds} folds...")
result = grid_search(dataset, "caspar", grid, plan)
best = result.best_params
print(
    f"chosen point: epsilon={best.epsilon:.2f}"
    f" h={best.kernel.bandwidth:g} alpha={best.kernel.alpha:g}"
    f"  (cv mse {result.best_score:.3f})"
)

stepwise_result = grid_search(dataset, "stepwise", stepwise_grid(dataset, n_epsilons=10), plan)
print(f"stepwise best cv mse: {stepwise_result.best_score:.3f}")
print(f"clustered best is never worse: {result.best_score <= stepwise_result.best_score}")

print("\ncv error by alpha (min over other axes):")
alphas = sorted({pt.kernel.alpha for pt in grid})
for alpha in alphas:
    scores = [
        result.mean_errors[i]
        for i, pt in enumerate(grid)
        if pt.kernel.alpha == alpha and np.isfinite(result.mean_errors[i])
    ]
    print(f"  alpha={alpha:3.1f}: {min(scores):8.3f}")
