"""Graph value types, thresholding, shortest paths, and efficiency/density metrics.

All graphs are undirected, simple, and immutable after construction.
Association matrices are validated for symmetry within ``SYMMETRY_TOL``
(then symmetrized by averaging) and their diagonals are forced to zero.
Unreachable node pairs carry an infinite distance and contribute zero to
efficiency sums, so every metric here is defined for disconnected graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path as _csgraph_shortest_path

from .errors import ValidationError

SYMMETRY_TOL = 1e-9
UNREACHABLE = np.inf


def max_edge_count(n_nodes: int) -> int:
    """Number of edges in the complete graph on ``n_nodes`` vertices."""
    return n_nodes * (n_nodes - 1) // 2


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(f"n{i}" for i in range(n))


def _as_square_matrix(matrix, context: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{context}: expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValidationError(f"{context}: matrix must have at least one node")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{context}: matrix entries must be finite")
    return m


def validate_symmetric_hollow(matrix, context: str = "matrix") -> np.ndarray:
    """Validate symmetry (within SYMMETRY_TOL) and a zero diagonal.

    Returns a new array symmetrized by averaging, diagonal forced to
    exactly zero.  Raises ValidationError when the asymmetry or the
    diagonal exceeds the tolerance.
    """
    m = _as_square_matrix(matrix, context)
    asym = np.abs(m - m.T)
    if asym.size and asym.max() > SYMMETRY_TOL:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise ValidationError(
            f"{context}: not symmetric at ({i},{j}): {m[i, j]!r} vs {m[j, i]!r}"
        )
    diag = np.abs(np.diagonal(m))
    if diag.size and diag.max() > SYMMETRY_TOL:
        i = int(np.argmax(diag))
        raise ValidationError(f"{context}: diagonal entry ({i},{i}) = {m[i, i]!r} is not zero")
    out = (m + m.T) / 2.0
    np.fill_diagonal(out, 0.0)
    return out


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric nonnegative-weight graph; one-to-one with an association matrix.

    ``weights[i, j]`` is the connection strength between nodes i and j; a
    zero entry means no edge.  ``node_coords`` is optional pass-through
    metadata (one 3-vector per node, e.g. stereotaxic millimeters) used
    only by exporters.
    """

    node_labels: tuple[str, ...]
    weights: np.ndarray
    node_coords: np.ndarray | None = None

    def __post_init__(self):
        w = validate_symmetric_hollow(self.weights, "weights")
        if w.min() < 0:
            i, j = np.unravel_index(np.argmin(w), w.shape)
            raise ValidationError(
                f"weights: negative entry {w[i, j]!r} at ({i},{j}); "
                "standardize signed association matrices first"
            )
        labels = tuple(str(x) for x in self.node_labels)
        if len(labels) != w.shape[0]:
            raise ValidationError(
                f"{len(labels)} node labels for a {w.shape[0]}-node weight matrix"
            )
        coords = self.node_coords
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.shape != (w.shape[0], 3):
                raise ValidationError(
                    f"node_coords must have shape ({w.shape[0]}, 3), got {coords.shape}"
                )
            coords = _freeze(coords)
        object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "weights", _freeze(w))
        object.__setattr__(self, "node_coords", coords)

    @classmethod
    def from_matrix(cls, weights, node_labels=None, node_coords=None) -> "WeightedGraph":
        w = np.asarray(weights, dtype=float)
        labels = _default_labels(w.shape[0]) if node_labels is None else tuple(node_labels)
        return cls(labels, w, node_coords)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    def positive_edges(self) -> list[tuple[int, int, float]]:
        """Edges with positive weight as (i, j, w), i < j, in lexicographic order."""
        i, j = np.nonzero(np.triu(self.weights, k=1))
        return [(int(a), int(b), float(self.weights[a, b])) for a, b in zip(i, j)]


@dataclass(frozen=True, eq=False)
class BinaryGraph:
    """Unweighted undirected graph from thresholding; adjacency is 0/1, hollow.

    ``node_coords`` is the same pass-through layout metadata as on
    WeightedGraph, so thresholded and inferred networks keep it.
    """

    node_labels: tuple[str, ...]
    adjacency: np.ndarray
    node_coords: np.ndarray | None = None
    edge_count: int = field(init=False)

    def __post_init__(self):
        a = _as_square_matrix(self.adjacency, "adjacency")
        if not np.array_equal(a, a.T):
            raise ValidationError("adjacency: not symmetric")
        if np.any(np.diagonal(a) != 0):
            raise ValidationError("adjacency: diagonal must be zero")
        if not np.isin(a, (0, 1)).all():
            raise ValidationError("adjacency: entries must be 0 or 1")
        labels = tuple(str(x) for x in self.node_labels)
        if len(labels) != a.shape[0]:
            raise ValidationError(
                f"{len(labels)} node labels for a {a.shape[0]}-node adjacency matrix"
            )
        coords = self.node_coords
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.shape != (a.shape[0], 3):
                raise ValidationError(
                    f"node_coords must have shape ({a.shape[0]}, 3), got {coords.shape}"
                )
            coords = _freeze(coords)
        object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "adjacency", _freeze(a.astype(np.uint8)))
        object.__setattr__(self, "node_coords", coords)
        object.__setattr__(self, "edge_count", int(a.sum()) // 2)

    @classmethod
    def from_adjacency(cls, adjacency, node_labels=None, node_coords=None) -> "BinaryGraph":
        a = np.asarray(adjacency)
        labels = _default_labels(a.shape[0]) if node_labels is None else tuple(node_labels)
        return cls(labels, a, node_coords)

    @classmethod
    def from_edges(cls, n_nodes: int, edges, node_labels=None) -> "BinaryGraph":
        a = np.zeros((n_nodes, n_nodes), dtype=np.uint8)
        for i, j in edges:
            if i == j:
                raise ValidationError(f"self-loop ({i},{i}) is not allowed")
            a[i, j] = a[j, i] = 1
        return cls.from_adjacency(a, node_labels)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as (i, j), i < j, in lexicographic order."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(a), int(b)) for a, b in zip(i, j)]

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(int)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """All-pairs shortest path lengths; unreachable pairs hold ``UNREACHABLE``."""

    dist: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValidationError(f"dist: expected a square matrix, got shape {d.shape}")
        if np.any(np.diagonal(d) != 0):
            raise ValidationError("dist: diagonal must be zero")
        if np.any(d < 0):
            raise ValidationError("dist: distances must be nonnegative")
        object.__setattr__(self, "dist", _freeze(d))

    @property
    def n_nodes(self) -> int:
        return self.dist.shape[0]


def _binary_unchecked(node_labels: tuple[str, ...], adjacency: np.ndarray) -> BinaryGraph:
    """Construct a BinaryGraph without re-validation.

    Internal fast path for tight loops; the caller guarantees a
    symmetric, hollow 0/1 uint8 array that it will not mutate.
    """
    g = object.__new__(BinaryGraph)
    object.__setattr__(g, "node_labels", node_labels)
    object.__setattr__(g, "adjacency", _freeze(adjacency))
    object.__setattr__(g, "node_coords", None)
    object.__setattr__(g, "edge_count", int(adjacency.sum()) // 2)
    return g


def threshold(matrix, tau: float) -> BinaryGraph:
    """Binarize a symmetric hollow association matrix at cut-off ``tau``.

    An edge (i, j) is kept iff matrix[i, j] > tau (strict), so tau = 0
    drops zero entries of a nonnegative matrix.
    """
    coords = None
    if isinstance(matrix, WeightedGraph):
        m, labels, coords = matrix.weights, matrix.node_labels, matrix.node_coords
    else:
        m = validate_symmetric_hollow(matrix, "threshold input")
        labels = _default_labels(m.shape[0])
    adjacency = (m > tau).astype(np.uint8)
    np.fill_diagonal(adjacency, 0)
    return BinaryGraph(labels, adjacency, coords)


def _hop_distances(adjacency: np.ndarray) -> np.ndarray:
    """All-pairs hop counts by simultaneous frontier expansion."""
    n = adjacency.shape[0]
    adj = adjacency.astype(np.uint8)
    dist = np.where(adj > 0, 1.0, np.inf)
    np.fill_diagonal(dist, 0.0)
    reach = (adj > 0) | np.eye(n, dtype=bool)
    hops = 1
    while True:
        grown = ((reach.astype(np.uint8) @ adj) > 0) | reach
        fresh = grown & ~reach
        if not fresh.any():
            return dist
        hops += 1
        dist[fresh] = hops
        reach = grown


def shortest_paths_unweighted(g: BinaryGraph) -> DistanceMatrix:
    """Hop-count shortest paths; disconnected graphs allowed."""
    if g.n_nodes == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    return DistanceMatrix(_hop_distances(g.adjacency))


def shortest_paths_weighted(g: WeightedGraph) -> DistanceMatrix:
    """Weighted shortest paths where traversing an edge costs 1/w.

    Stronger connections are shorter; zero-weight pairs carry no edge.
    """
    if g.n_nodes == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    w = g.weights
    lengths = np.zeros_like(w)
    pos = w > 0
    lengths[pos] = 1.0 / w[pos]
    d = _csgraph_shortest_path(lengths, method="D", directed=False, unweighted=False)
    return DistanceMatrix(d)


def _efficiency_from_distances(dist: np.ndarray) -> float:
    n = dist.shape[0]
    off = ~np.eye(n, dtype=bool)
    d = dist[off]
    inv = np.zeros_like(d)
    reachable = np.isfinite(d) & (d > 0)
    inv[reachable] = 1.0 / d[reachable]
    return float(inv.sum() / (n * (n - 1)))


def global_efficiency(g: BinaryGraph) -> float:
    """Mean inverse shortest-path length over ordered node pairs.

    Equals 1 for the complete graph and 0 for the edgeless graph;
    unreachable pairs contribute 0.
    """
    if g.n_nodes < 2:
        raise ValidationError("global_efficiency needs at least 2 nodes")
    return _efficiency_from_distances(shortest_paths_unweighted(g).dist)


def local_efficiency(g: BinaryGraph) -> float:
    """Mean over nodes of the global efficiency of each open neighborhood.

    Nodes with fewer than two neighbors contribute 0.
    """
    if g.n_nodes < 2:
        raise ValidationError("local_efficiency needs at least 2 nodes")
    total = 0.0
    for v in range(g.n_nodes):
        nbrs = np.flatnonzero(g.adjacency[v])
        if nbrs.size < 2:
            continue
        sub = g.adjacency[np.ix_(nbrs, nbrs)]
        labels = tuple(g.node_labels[i] for i in nbrs)
        total += global_efficiency(BinaryGraph(labels, sub))
    return total / g.n_nodes


def weighted_efficiency(g: WeightedGraph) -> float:
    """Mean inverse weighted shortest-path length over ordered node pairs."""
    if g.n_nodes < 2:
        raise ValidationError("weighted_efficiency needs at least 2 nodes")
    return _efficiency_from_distances(shortest_paths_weighted(g).dist)


def weighted_density(g: WeightedGraph) -> float:
    """Mean edge weight over ordered node pairs (the weighted cost)."""
    if g.n_nodes < 2:
        raise ValidationError("weighted_density needs at least 2 nodes")
    n = g.n_nodes
    return float(g.weights.sum() / (n * (n - 1)))


def spread_condition_holds(g: WeightedGraph) -> bool:
    """True iff the smallest positive weight is at least half the largest.

    Under this condition no two-hop detour can beat a direct edge, and
    weighted efficiency collapses to weighted density.
    """
    pos = g.weights[g.weights > 0]
    if pos.size == 0:
        raise ValidationError("spread condition is undefined without positive weights")
    return bool(pos.min() >= 0.5 * pos.max())
