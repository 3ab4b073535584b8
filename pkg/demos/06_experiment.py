"""A miniature tuned method comparison, written to a results table.

The full benchmark (p=250, seven groups of five, twenty replicates per
sample size) is what the acceptance suite runs; this demo uses a scaled-down
version of the same pipeline so it finishes in under a minute.

Run:  python demos/06_experiment.py
"""

from caspar import ExperimentConfig, run_experiment, summarize_results, write_results

config = ExperimentConfig(
    ns=(50, 90),
    replicates=3,
    methods=("stepwise", "caspar", "lasso"),
    p=120,
    n_groups=3,
    group_size=5,
    seed=2024,
    n_folds=5,
    alphas=(0.1, 0.5, 1.0),
    bandwidths=(2.0, 3.0),
    n_epsilons=8,
    n_lambdas=10,
)

rows = run_experiment(config)
write_results(rows, "demo_results.csv")
print(f"wrote {len(rows)} rows to demo_results.csv\n")

summary = summarize_results(rows)
print(f"{'n':>4} {'method':>9} {'recovery':>9} {'tpr':>6} {'fpr':>6} {'picked':>7}")
for (n, method), stats in sorted(summary.items()):
    print(
        f"{n:>4} {method:>9} {stats['recovery_error']:9.3f}"
        f" {stats['tpr']:6.2f} {stats['fpr']:6.2f} {stats['n_selected']:7.1f}"
    )

print(
    "\nWith scarce rows the clustered selector recovers far more of the"
    "\nsignal than plain stepwise at the same tiny false-positive rate;"
    "\nthe lasso hedges by selecting several times too many predictors."
)
