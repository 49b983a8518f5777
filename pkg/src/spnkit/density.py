"""Density thresholding and density-integrated topology metrics.

A weighted graph is reduced to a family of unweighted graphs by keeping
exactly the k strongest edges for each density level k; a binary-graph
metric evaluated along a distribution over k and averaged gives its
density-integrated version.  Because the per-k edge selection depends
only on weight *ranks*, the integrated value is invariant under any
strictly monotone rescaling of the weights - the property
``verify_monotone_invariance`` checks edge-set-wise.

Ties between equal weights are broken by the lexicographic (i, j) node
pair, so selections are deterministic and nested in k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError
from .graphs import (
    BinaryGraph,
    WeightedGraph,
    _binary_unchecked,
    global_efficiency,
    local_efficiency,
    max_edge_count,
)
from .modularity import greedy_modularity

_PROFILE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """A metric evaluated along a grid of density levels plus its expectation.

    ``densities`` are edge counts k, ``values`` the metric at each k,
    ``weights`` the probability mass p(k) (sums to 1), and ``integrated``
    the dot product of values and weights.
    """

    densities: tuple[int, ...]
    values: np.ndarray
    weights: np.ndarray
    integrated: float

    def __post_init__(self):
        densities = tuple(int(k) for k in self.densities)
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if not (len(densities) == values.size == weights.size):
            raise ValidationError("densities, values, and weights must have equal length")
        if np.any(weights < 0):
            raise ValidationError("probability masses must be nonnegative")
        if abs(weights.sum() - 1.0) > _PROFILE_TOL:
            raise ValidationError(f"probability masses sum to {weights.sum()!r}, not 1")
        if abs(float(values @ weights) - self.integrated) > _PROFILE_TOL:
            raise ValidationError("integrated value does not match dot(values, weights)")
        values.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "densities", densities)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "integrated", float(self.integrated))


def ranked_edges(g: WeightedGraph) -> list[tuple[int, int, float]]:
    """Positive edges sorted strongest first; ties by lexicographic (i, j)."""
    return sorted(g.positive_edges(), key=lambda e: (-e[2], e[0], e[1]))


def _graph_from_prefix(g: WeightedGraph, order, k: int) -> BinaryGraph:
    adjacency = np.zeros((g.n_nodes, g.n_nodes), dtype=np.uint8)
    for i, j, _ in order[:k]:
        adjacency[i, j] = adjacency[j, i] = 1
    return BinaryGraph(g.node_labels, adjacency, g.node_coords)


def density_threshold(g: WeightedGraph, k: int) -> BinaryGraph:
    """Unweighted graph of exactly the k largest-weight edges."""
    if not isinstance(k, (int, np.integer)):
        raise ValidationError(f"density level k must be an integer, got {k!r}")
    limit = max_edge_count(g.n_nodes)
    if k < 0 or k > limit:
        raise ValidationError(f"density level k={k} outside 0..{limit}")
    order = ranked_edges(g)
    if k > len(order):
        raise ValidationError(
            f"k={k} exceeds the {len(order)} positive-weight edges; "
            "zero-weight pairs cannot be selected"
        )
    return _graph_from_prefix(g, order, int(k))


def _validated_grid(g: WeightedGraph, grid, n_positive: int) -> list[int]:
    if grid is None:
        grid = range(1, n_positive + 1)
    ks = [int(k) for k in grid]
    if not ks:
        raise ValidationError("density grid is empty")
    limit = max_edge_count(g.n_nodes)
    for k in ks:
        if k < 0 or k > limit:
            raise ValidationError(f"density level k={k} outside 0..{limit}")
        if k > n_positive:
            raise ValidationError(f"k={k} exceeds the {n_positive} positive-weight edges")
    return ks


def _profile_values(
    g: WeightedGraph, order, ks: Sequence[int], metric: Callable[[BinaryGraph], float]
) -> np.ndarray:
    # One incremental adjacency walk over the ranked edges; each needed k
    # gets its own frozen snapshot.
    values = np.empty(len(ks), dtype=float)
    by_k: dict[int, float] = {}
    adjacency = np.zeros((g.n_nodes, g.n_nodes), dtype=np.uint8)
    filled = 0
    for k in sorted(set(ks)):
        while filled < k:
            i, j, _ = order[filled]
            adjacency[i, j] = adjacency[j, i] = 1
            filled += 1
        by_k[k] = float(metric(_binary_unchecked(g.node_labels, adjacency.copy())))
    for idx, k in enumerate(ks):
        values[idx] = by_k[k]
    return values


def density_integrated_metric(
    g: WeightedGraph,
    metric: Callable[[BinaryGraph], float],
    grid: Sequence[int] | None = None,
    mass: Sequence[float] | None = None,
) -> DensityProfile:
    """Evaluate ``metric`` along density levels and integrate over p(k).

    The default grid is every realizable density k = 1 .. (number of
    positive edges) with uniform mass; a custom grid may include k = 0
    and a custom mass must sum to 1.
    """
    order = ranked_edges(g)
    ks = _validated_grid(g, grid, len(order))
    if mass is None:
        weights = np.full(len(ks), 1.0 / len(ks))
    else:
        weights = np.asarray(mass, dtype=float)
        if weights.size != len(ks):
            raise ValidationError("mass must have one entry per grid density")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > _PROFILE_TOL:
            raise ValidationError("mass must be nonnegative and sum to 1")
    values = _profile_values(g, order, ks, metric)
    integrated = float(values @ weights)
    return DensityProfile(tuple(ks), values, weights, integrated)


def _monotone_direction(weights: np.ndarray, h: Callable[[float], float]) -> int:
    """+1 if h is strictly increasing on the given weights, -1 if decreasing."""
    distinct = np.unique(weights)
    if distinct.size == 1:
        return 1
    hv = np.array([h(float(w)) for w in distinct], dtype=float)
    diffs = np.diff(hv)
    if np.all(diffs > 0):
        return 1
    if np.all(diffs < 0):
        return -1
    bad = int(np.flatnonzero(diffs <= 0 if diffs[0] > 0 else diffs >= 0)[0])
    raise ValidationError(
        "h is not strictly monotone on the graph's weights: "
        f"h({distinct[bad]!r}) and h({distinct[bad + 1]!r}) break the order"
    )


def verify_monotone_invariance(
    g: WeightedGraph,
    h: Callable[[float], float],
    metric: Callable[[BinaryGraph], float] = global_efficiency,
) -> bool:
    """Check that rescaling weights by a strictly monotone h leaves the
    density-integrated metric untouched.

    Compares the selected edge set at every density level (a decreasing h
    reverses the selection order, matching its reversed ranks) and then
    the metric values themselves at tolerance 1e-12.
    """
    edges = g.positive_edges()
    if not edges:
        raise ValidationError("graph has no positive weights")
    w = np.array([e[2] for e in edges])
    direction = _monotone_direction(w, h)

    base_order = sorted(edges, key=lambda e: (-e[2], e[0], e[1]))
    if direction > 0:
        trans_order = sorted(edges, key=lambda e: (-h(e[2]), e[0], e[1]))
    else:
        trans_order = sorted(edges, key=lambda e: (h(e[2]), e[0], e[1]))

    if [(i, j) for i, j, _ in base_order] != [(i, j) for i, j, _ in trans_order]:
        return False

    ks = list(range(1, len(edges) + 1))
    base_values = _profile_values(g, base_order, ks, metric)
    trans_values = _profile_values(g, trans_order, ks, metric)
    if np.max(np.abs(base_values - trans_values)) > _PROFILE_TOL:
        return False
    return abs(float(base_values.mean() - trans_values.mean())) <= _PROFILE_TOL


METRICS: dict[str, Callable[[BinaryGraph], float]] = {
    "global_efficiency": global_efficiency,
    "local_efficiency": local_efficiency,
    "modularity_count": lambda g: float(greedy_modularity(g).module_count),
    "modularity_q": lambda g: greedy_modularity(g).q,
}


def metric_by_name(name: str) -> Callable[[BinaryGraph], float]:
    try:
        return METRICS[name]
    except KeyError:
        raise ValidationError(
            f"unknown metric {name!r}; choose from {sorted(METRICS)}"
        ) from None
