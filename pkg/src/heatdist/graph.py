"""Weighted undirected graphs, their matrices, and generators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Graph",
    "GraphError",
    "SelfLoopError",
    "DuplicateEdgeError",
    "NonPositiveWeightError",
    "NodeIndexError",
    "ConnectivityError",
    "PerturbationConfig",
    "build_graph",
    "laplacian",
    "adjacency",
    "degree",
    "is_connected",
    "perturb_weights",
    "figure1_graph",
    "clustered_edges",
    "three_cluster_graph",
    "lattice_graph",
]


class GraphError(ValueError):
    """Invalid graph description."""

    def __init__(self, message: str, edge=None):
        super().__init__(message)
        self.edge = edge


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class NonPositiveWeightError(GraphError):
    pass


class NodeIndexError(GraphError):
    pass


class ConnectivityError(RuntimeError):
    """A random generator could not produce a connected graph."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted undirected simple graph on nodes ``0..n-1``.

    Edges are held as three parallel read-only arrays with ``rows < cols``.
    Use :func:`build_graph` to construct one from an edge list.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    @property
    def num_edges(self) -> int:
        return int(self.rows.shape[0])

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.rows, self.cols, self.weights)]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in zip(self.rows, self.cols)}

    def with_weights(self, weights) -> "Graph":
        """Same topology, new weights (validated)."""
        w = np.asarray(weights, dtype=float)
        if w.shape != self.weights.shape:
            raise ValueError("weight vector does not match edge count")
        return build_graph(self.n, zip(self.rows.tolist(), self.cols.tolist(), w.tolist()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


def build_graph(n: int, edges: Iterable[Sequence]) -> Graph:
    """Validate an edge list and return a :class:`Graph`.

    Each edge is ``(i, j)`` or ``(i, j, w)``; a missing weight means 1.
    Edges are canonicalized to ``i < j``.

    Raises
    ------
    SelfLoopError, DuplicateEdgeError, NonPositiveWeightError, NodeIndexError
        Naming the offending edge.
    """
    n = int(n)
    if n < 0:
        raise ValueError("node count must be nonnegative")
    rows, cols, weights = [], [], []
    seen: set[tuple[int, int]] = set()
    for edge in edges:
        if len(edge) == 2:
            i, j = edge
            w = 1.0
        else:
            i, j, w = edge
        i, j, w = int(i), int(j), float(w)
        if not (0 <= i < n and 0 <= j < n):
            raise NodeIndexError(f"edge ({i}, {j}) has a node index outside [0, {n})", (i, j, w))
        if i == j:
            raise SelfLoopError(f"self-loop at node {i}", (i, j, w))
        if not (w > 0 and np.isfinite(w)):
            raise NonPositiveWeightError(f"edge ({i}, {j}) has non-positive weight {w}", (i, j, w))
        if i > j:
            i, j = j, i
        if (i, j) in seen:
            raise DuplicateEdgeError(f"edge ({i}, {j}) listed twice", (i, j, w))
        seen.add((i, j))
        rows.append(i)
        cols.append(j)
        weights.append(w)
    arrays = [np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp), np.array(weights, dtype=float)]
    for a in arrays:
        a.flags.writeable = False
    return Graph(n, *arrays)


def adjacency(g: Graph) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    a[g.rows, g.cols] = g.weights
    a[g.cols, g.rows] = g.weights
    return a


def degree(g: Graph) -> np.ndarray:
    return np.diag(adjacency(g).sum(axis=1))


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``D - A``."""
    a = adjacency(g)
    lap = -a
    lap[np.diag_indices(g.n)] = a.sum(axis=1)
    return lap


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    m = coo_matrix((np.ones(g.num_edges), (g.rows, g.cols)), shape=(g.n, g.n))
    ncomp, _ = connected_components(m, directed=False)
    return ncomp == 1


@dataclass(frozen=True)
class PerturbationConfig:
    """Multiplicative edge-weight noise: ``w' = u w``, ``u ~ U[1-delta, 1+delta]``."""

    delta: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")


def perturb_weights(g: Graph, cfg: PerturbationConfig, rng: np.random.Generator | None = None):
    """Perturb every edge weight and return ``(g_perturbed, E)``.

    ``E = L(g_perturbed) - L(g)``. When ``rng`` is omitted a generator
    seeded from ``cfg.seed`` is used.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    u = rng.uniform(1.0 - cfg.delta, 1.0 + cfg.delta, size=g.num_edges)
    g2 = g.with_weights(g.weights * u)
    return g2, laplacian(g2) - laplacian(g)


# 1-based labels as drawn in the worked example figure
_EXAMPLE_EDGES = [
    (1, 2), (2, 3), (1, 4), (2, 4), (3, 4), (4, 5),
    (5, 6), (6, 7), (7, 8), (8, 9), (8, 10),
]


def figure1_graph():
    """The 10-node worked-example graph and its three one-hot signals.

    Returns ``(graph, r, g, y)`` where ``r``, ``g`` and ``y`` are the
    indicators of nodes 0, 5 and 6.
    """
    graph = build_graph(10, [(i - 1, j - 1, 1.0) for i, j in _EXAMPLE_EDGES])
    eye = np.eye(10)
    return graph, eye[0].copy(), eye[5].copy(), eye[6].copy()


def clustered_edges(
    sizes: Sequence[int],
    p_intra: float,
    w_lo: float,
    w_hi: float,
    bridges: int,
    rng: np.random.Generator,
) -> list[tuple[int, int, float]]:
    """One unconditioned draw of the clustered edge list.

    Each intra-cluster pair is linked with probability ``p_intra`` and a
    weight drawn from ``U[w_lo, w_hi]``; then ``bridges`` distinct
    unit-weight edges join uniformly drawn node pairs from different
    clusters.
    """
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    edges = []
    for c, size in enumerate(sizes):
        iu, ju = np.triu_indices(size, k=1)
        keep = rng.random(iu.shape[0]) < p_intra
        w = rng.uniform(w_lo, w_hi, size=int(keep.sum()))
        base = offsets[c]
        edges.extend(zip((iu[keep] + base).tolist(), (ju[keep] + base).tolist(), w.tolist()))
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < bridges:
        i, j = (int(x) for x in rng.integers(0, n, size=2))
        if labels[i] == labels[j]:
            continue
        pair = (min(i, j), max(i, j))
        if pair in chosen:
            continue
        chosen.add(pair)
        edges.append((pair[0], pair[1], 1.0))
    return edges


def three_cluster_graph(
    sizes: Sequence[int] = (9, 8, 10),
    p_intra: float = 0.4,
    w_lo: float = 1.0,
    w_hi: float = 3.0,
    bridges: int = 3,
    rng: np.random.Generator | None = None,
    max_tries: int = 1000,
):
    """Random clustered graph; returns ``(graph, node_labels)``.

    Edges come from :func:`clustered_edges`. The whole edge list is
    redrawn until the graph is connected, so the accepted graphs are
    slightly denser on average than a single draw.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError("sizes must be a nonempty list of positive integers")
    if not 0.0 < p_intra <= 1.0:
        raise ValueError("p_intra must lie in (0, 1]")
    if not 0.0 < w_lo <= w_hi:
        raise ValueError("need 0 < w_lo <= w_hi")
    if bridges < 1:
        raise ValueError("need at least one bridge edge")
    if rng is None:
        rng = np.random.default_rng()
    n = sum(sizes)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    inter_pairs = (n * n - sum(s * s for s in sizes)) // 2
    if bridges > inter_pairs:
        raise ValueError(f"only {inter_pairs} inter-cluster pairs available for {bridges} bridges")
    for _ in range(max_tries):
        g = build_graph(n, clustered_edges(sizes, p_intra, w_lo, w_hi, bridges, rng))
        if is_connected(g):
            return g, labels
    raise ConnectivityError(f"no connected graph after {max_tries} attempts")


def lattice_graph(rows: int, cols: int) -> Graph:
    """Pixel grid with unit edges between 4-neighbours, row-major node order."""
    if rows < 1 or cols < 1:
        raise ValueError("lattice dimensions must be positive")
    idx = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    pairs = np.concatenate([horiz, vert])
    return build_graph(rows * cols, ((int(i), int(j), 1.0) for i, j in pairs))
