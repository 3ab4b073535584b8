"""From aligned sequences to a 0/1 mutation design matrix.

Every position with more than one observed residue yields one indicator
column per non-reference residue; the reference is the most frequent one.
Columns remember their sequence position, so mutations at the same position
are distance zero apart.

Run:  python demos/04_sequence_encoding.py
"""

from caspar import SequencePanel, encode_panel

panel = SequencePanel(
    ids=("v1", "v2", "v3", "v4", "v5"),
    sequences=(
        "MAKVLDT",
        "MAKVLDT",
        "MIKVLNT",
        "MIKVRDT",
        "MAKVRDX",  # X marks an unresolved residue: contributes nothing
    ),
)
fold_resistance = [2.0, 4.0, 64.0, 32.0, 8.0]

dataset, columns, structure = encode_panel(panel, fold_resistance)  # log10 response

print(f"{panel.n} sequences of length {panel.length}")
print(f"encoded into {dataset.p} mutation indicators\n")

print("columns (position, residue):")
for c in columns:
    print(f"  x{c.index}: position {c.position}, residue {c.residue}")

print("\ndesign matrix (rows = sequences):")
header = "        " + " ".join(f"x{c.index}" for c in columns)
print(header)
for i, sid in enumerate(panel.ids):
    cells = " ".join(f"{int(v)} " for v in dataset.X[i])
    print(f"  {sid}:  {cells}   y = log10 fold = {dataset.y[i]:.2f}")

print("\npairwise distances between mutation columns (sequence positions):")
d = structure.distances
for j in range(dataset.p):
    print("  " + " ".join(f"{d[j, k]:4.0f}" for k in range(dataset.p)))
print("\nmutations at one position sit at distance zero; the clustered")
print("selector can treat them as one site when it grows a model.")
