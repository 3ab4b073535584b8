"""Predictor distance oracles and the kernel machinery for clustered selection.

Distances are precomputed and cached at construction; target problems have at
most a few thousand predictors, so a dense p x p matrix is fine.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .exceptions import InvalidGraph, ParseError

POSITIONAL = "positional"
GRAPH = "graph"


def boxcar(d, h):
    """Boxcar kernel, peak-normalized: 1 inside the bandwidth, 0 outside."""
    return np.where(np.asarray(d, dtype=float) < h, 1.0, 0.0)


def epanechnikov(d, h):
    """Epanechnikov kernel, peak-normalized: max(0, 1 - (d/h)^2)."""
    u = np.asarray(d, dtype=float) / h
    return np.maximum(0.0, 1.0 - u * u)


def gaussian(d, h):
    """Gaussian kernel, peak-normalized: exp(-d^2 / (2 h^2))."""
    u = np.asarray(d, dtype=float) / h
    return np.exp(-0.5 * u * u)


KERNEL_FAMILIES = {
    "boxcar": boxcar,
    "epanechnikov": epanechnikov,
    "gaussian": gaussian,
}


@dataclass(frozen=True)
class KernelSpec:
    """Base kernel family plus bandwidth and uniform-mixture weight.

    ``alpha`` mixes a uniform floor with the base kernel:
    ``alpha + (1 - alpha) * K_h(d)``, so values always lie in [alpha, 1].
    ``alpha`` controls how easily new clusters form; ``bandwidth`` controls
    how tight each cluster is.
    """

    family: str
    bandwidth: float
    alpha: float

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; "
                f"choose from {sorted(KERNEL_FAMILIES)}"
            )
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError("bandwidth must be positive and finite")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")

    def base(self, d) -> np.ndarray:
        """Evaluate the peak-normalized base kernel at distances d."""
        d = np.asarray(d, dtype=float)
        out = np.zeros_like(d)
        finite = np.isfinite(d)
        out[finite] = KERNEL_FAMILIES[self.family](d[finite], self.bandwidth)
        return out

    def mixed(self, d) -> np.ndarray:
        """Uniform/base mixture alpha + (1 - alpha) K_h(d)."""
        return self.alpha + (1.0 - self.alpha) * self.base(d)


class PredictorStructure:
    """A symmetric distance oracle over predictor indices.

    Build via :meth:`from_positions` (distance = absolute position
    difference) or :meth:`from_graph` (distance = shortest weighted path
    between the predictors' nodes; unreachable pairs are ``inf``).
    """

    def __init__(self, distances: np.ndarray, variant: str, positions=None):
        d = np.array(distances, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if np.any(np.isnan(d)):
            raise ValueError("distance matrix contains NaN")
        if np.any(d < 0):
            raise ValueError("distances must be nonnegative")
        if np.any(np.diag(d) != 0):
            raise ValueError("self-distances must be zero")
        # Shortest-path sums can differ in the last ulp across directions.
        d = np.minimum(d, d.T)
        d.setflags(write=False)
        self._distances = d
        self.variant = variant
        self.positions = None if positions is None else np.asarray(positions, dtype=int)

    @classmethod
    def from_positions(cls, positions) -> "PredictorStructure":
        """Distances are absolute differences of integer predictor positions."""
        pos = np.asarray(positions, dtype=int)
        if pos.ndim != 1 or pos.size == 0:
            raise ValueError("positions must be a nonempty 1-d integer array")
        d = np.abs(pos[:, None] - pos[None, :]).astype(float)
        return cls(d, POSITIONAL, positions=pos)

    @classmethod
    def from_graph(cls, edges, predictor_nodes, n_nodes=None) -> "PredictorStructure":
        """Shortest-path distances on a weighted undirected graph.

        Parameters
        ----------
        edges:
            Iterable of ``(u, v, weight)`` with nonnegative weights. Parallel
            edges keep the smallest weight.
        predictor_nodes:
            Node index for each predictor; several predictors may share a node
            (their distance is then zero).
        n_nodes:
            Total node count; defaults to one past the largest index seen.
        """
        pred = np.asarray(predictor_nodes, dtype=int)
        if pred.ndim != 1 or pred.size == 0:
            raise ValueError("predictor_nodes must be a nonempty 1-d integer array")
        if np.any(pred < 0):
            raise InvalidGraph("predictor node indices must be nonnegative")
        best: dict[tuple[int, int], float] = {}
        max_node = int(pred.max())
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if u < 0 or v < 0:
                raise InvalidGraph(f"negative node index in edge ({u}, {v})")
            if w < 0:
                raise InvalidGraph(f"negative weight {w} on edge ({u}, {v})")
            key = (u, v) if u <= v else (v, u)
            if key not in best or w < best[key]:
                best[key] = w
            max_node = max(max_node, u, v)
        if n_nodes is None:
            n_nodes = max_node + 1
        elif n_nodes <= max_node:
            raise InvalidGraph(f"n_nodes={n_nodes} is too small for node index {max_node}")
        rows = np.array([k[0] for k in best], dtype=int)
        cols = np.array([k[1] for k in best], dtype=int)
        data = np.array(list(best.values()), dtype=float)
        graph = csr_matrix((data, (rows, cols)), shape=(n_nodes, n_nodes))
        node_dist = dijkstra(graph, directed=False, indices=pred)
        return cls(node_dist[:, pred], GRAPH)

    @property
    def p(self) -> int:
        return self._distances.shape[0]

    @property
    def distances(self) -> np.ndarray:
        """The cached p x p distance matrix (read-only)."""
        return self._distances


def pairwise_distances(structure: PredictorStructure) -> np.ndarray:
    """The structure's cached p x p distance matrix."""
    return structure.distances


def candidate_weights(active, kernel: KernelSpec, structure: PredictorStructure) -> np.ndarray:
    """Selection weights for every predictor given the current active set.

    With an empty active set every weight is 1 (first-iteration rule).
    Otherwise the base kernel is averaged over the active members and mixed
    with the uniform floor:
    ``W_l = alpha + (1 - alpha) * mean_k K_h(d(l, k))``, so every weight lies
    in [alpha, 1]. Weights are returned for active predictors too, though the
    solvers never select those.
    """
    active = np.asarray(sorted(set(int(a) for a in active)), dtype=int)
    p = structure.p
    if active.size and (active[0] < 0 or active[-1] >= p):
        raise ValueError(f"active indices must lie in [0, {p})")
    if active.size == 0:
        return np.ones(p)
    # C-contiguous so the reduction order matches the solvers' cached path.
    base = kernel.base(np.ascontiguousarray(structure.distances[:, active]))
    return kernel.alpha + (1.0 - kernel.alpha) * base.mean(axis=1)


def _parse_lines(path):
    text = Path(path).read_text()
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_number, line


def load_edge_list(path) -> list[tuple[int, int, float]]:
    """Read edges from a text file with one `u v weight` triple per line.

    Blank lines and ``#`` comments are ignored.
    """
    edges = []
    for line_number, line in _parse_lines(path):
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(path, line_number, f"expected 'u v weight', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ParseError(path, line_number, str(exc)) from exc
    return edges


def load_node_map(path) -> np.ndarray:
    """Read the predictor-to-node map: one node index per line, in column order."""
    nodes = []
    for line_number, line in _parse_lines(path):
        try:
            nodes.append(int(line))
        except ValueError as exc:
            raise ParseError(path, line_number, str(exc)) from exc
    if not nodes:
        raise ParseError(path, 1, "node map is empty")
    return np.asarray(nodes, dtype=int)


def load_positions(path) -> np.ndarray:
    """Read integer predictor positions, one per line, in column order."""
    positions = []
    for line_number, line in _parse_lines(path):
        try:
            positions.append(int(line))
        except ValueError as exc:
            raise ParseError(path, line_number, str(exc)) from exc
    if not positions:
        raise ParseError(path, 1, "position file is empty")
    return np.asarray(positions, dtype=int)


def load_graph_structure(edges_path, node_map_path) -> PredictorStructure:
    """Build a graph-distance structure from an edge list and node map file."""
    return PredictorStructure.from_graph(load_edge_list(edges_path), load_node_map(node_map_path))
