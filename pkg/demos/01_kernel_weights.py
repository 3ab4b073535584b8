"""How the selection weights behave: base kernels, the uniform mixture, and
the effect of a growing active set.

Run:  python demos/01_kernel_weights.py
"""

import numpy as np

from caspar import KernelSpec, PredictorStructure, candidate_weights

# Twenty predictors on a line, one unit apart.
positions = np.arange(20)
structure = PredictorStructure.from_positions(positions)

print("Base kernels at distances 0..5 (bandwidth 3):")
for family in ("boxcar", "epanechnikov", "gaussian"):
    spec = KernelSpec(family, 3.0, 0.0)
    row = " ".join(f"{v:5.2f}" for v in spec.base(np.arange(6.0)))
    print(f"  {family:>13}: {row}")

# The mixture keeps a floor of alpha everywhere, so far-away predictors can
# still start a new cluster.
print("\nMixture alpha + (1 - alpha) * K_h(d), alpha = 0.3:")
spec = KernelSpec("epanechnikov", 3.0, 0.3)
row = " ".join(f"{v:5.2f}" for v in spec.mixed(np.arange(6.0)))
print(f"  {'epanechnikov':>13}: {row}")

# Weights over all candidates as the active set grows around position 8.
print("\nCandidate weights with boxcar h=2, alpha=0.3:")
for active in ([], [8], [8, 9], [8, 9, 2]):
    w = candidate_weights(active, KernelSpec("boxcar", 2.0, 0.3), structure)
    marks = "".join("*" if j in active else " " for j in positions)
    print(f"  active={active!s:12}  " + " ".join(f"{v:4.2f}" for v in w))
    print(f"  {'':12}        " + "    ".join(marks))

print(
    "\nAn empty active set gives weight 1 everywhere (first step is plain"
    "\nstepwise); afterwards candidates near the active set are boosted and"
    "\neveryone else sits at the alpha floor."
)
