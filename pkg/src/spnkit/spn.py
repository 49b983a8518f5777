"""Mass-univariate summary networks over populations of correlation matrices.

Inference always runs on the Fisher-transformed correlations themselves,
never on averaged thresholded graphs (binarization and averaging do not
commute).  Three pipelines are provided:

* mean SPN - per-condition z-tests of each edge against the pooled grand
  mean and grand standard deviation; an edge enters the network when it
  survives correction with a positive effect sign.
* differential SPN+/- - per-edge repeated-measures F-tests over the full
  subjects x conditions table; surviving edges are routed by the sign of
  the linear trend over the condition gradient.
* node differential SPN+/- - the same model applied to per-node signal
  intensities, flagging vertices instead of edges.

Hypotheses are ordered by the upper-triangle edge list (i < j,
lexicographic); the FDR decision mask in each result follows that order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStatisticsWarning, IncompleteDesignError, ValidationError
from .graphs import BinaryGraph, validate_symmetric_hollow
from .stats import (
    FdrDecision,
    TestResult,
    bh_fdr,
    fisher_z,
    grand_mean_z_test,
    repeated_measures_fit,
    uncorrected,
)

CORRECTIONS = ("fdr", "none")


def edge_pairs(n_nodes: int) -> list[tuple[int, int]]:
    """Canonical hypothesis order: upper-triangle (i, j), i < j, lexicographic."""
    return [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]


@dataclass(frozen=True, eq=False)
class StudyDataset:
    """Balanced n x J array of per-subject, per-condition correlation matrices.

    ``correlations`` has shape (n, J, N_V, N_V); every cell is validated
    symmetric (tolerance 1e-9, then symmetrized), hollow, with entries in
    [-1, 1].  ``condition_labels`` are ordered by the experimental
    gradient.  ``node_coords`` is optional pass-through metadata.
    """

    correlations: np.ndarray
    node_labels: tuple[str, ...]
    condition_labels: tuple[str, ...]
    subject_ids: tuple[str, ...]
    node_coords: np.ndarray | None = None

    def __post_init__(self):
        arr = np.asarray(self.correlations, dtype=float)
        if arr.ndim != 4 or arr.shape[2] != arr.shape[3]:
            raise ValidationError(
                f"correlations must have shape (n, J, N_V, N_V), got {arr.shape}"
            )
        n, j, n_v, _ = arr.shape
        if not np.all(np.isfinite(arr)):
            raise IncompleteDesignError("dataset has missing or non-finite cells")
        if np.any(np.abs(arr) > 1):
            raise ValidationError("correlation entries must lie in [-1, 1]")
        cleaned = np.empty_like(arr)
        for i in range(n):
            for k in range(j):
                cleaned[i, k] = validate_symmetric_hollow(
                    arr[i, k], f"correlations[subject {i}, condition {k}]"
                )
        cleaned.setflags(write=False)
        labels = tuple(str(x) for x in self.node_labels)
        conditions = tuple(str(x) for x in self.condition_labels)
        subjects = tuple(str(x) for x in self.subject_ids)
        if len(labels) != n_v:
            raise ValidationError(f"{len(labels)} node labels for {n_v} nodes")
        if len(conditions) != j:
            raise ValidationError(f"{len(conditions)} condition labels for {j} conditions")
        if len(subjects) != n:
            raise ValidationError(f"{len(subjects)} subject ids for {n} subjects")
        coords = self.node_coords
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.shape != (n_v, 3):
                raise ValidationError(f"node_coords must have shape ({n_v}, 3)")
            coords.setflags(write=False)
        object.__setattr__(self, "correlations", cleaned)
        object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "condition_labels", conditions)
        object.__setattr__(self, "subject_ids", subjects)
        object.__setattr__(self, "node_coords", coords)

    @property
    def n_subjects(self) -> int:
        return self.correlations.shape[0]

    @property
    def n_conditions(self) -> int:
        return self.correlations.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.correlations.shape[2]

    def edge_values(self) -> np.ndarray:
        """Upper-triangle entries as an (n, J, N_E) array in edge_pairs order."""
        iu = np.triu_indices(self.n_nodes, k=1)
        return self.correlations[:, :, iu[0], iu[1]]


@dataclass(frozen=True, eq=False)
class NodeSignalDataset:
    """Balanced n x J array of per-node time-averaged intensity signals."""

    signals: np.ndarray
    node_labels: tuple[str, ...]
    condition_labels: tuple[str, ...]
    subject_ids: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.signals, dtype=float)
        if arr.ndim != 3:
            raise ValidationError(f"signals must have shape (n, J, N_V), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise IncompleteDesignError("signal dataset has missing or non-finite cells")
        arr = arr.copy()
        arr.setflags(write=False)
        labels = tuple(str(x) for x in self.node_labels)
        conditions = tuple(str(x) for x in self.condition_labels)
        subjects = tuple(str(x) for x in self.subject_ids)
        n, j, n_v = arr.shape
        if len(labels) != n_v or len(conditions) != j or len(subjects) != n:
            raise ValidationError("label counts do not match the signal array shape")
        object.__setattr__(self, "signals", arr)
        object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "condition_labels", conditions)
        object.__setattr__(self, "subject_ids", subjects)


@dataclass(frozen=True, eq=False)
class SpnResult:
    """A summary network with the per-hypothesis statistics behind it.

    ``per_edge`` (or ``per_node`` for node analyses) holds every tested
    hypothesis, significant or not; ``correction`` is the decision mask
    in edge_pairs (or node-index) order, so the network is re-derivable.
    """

    network: BinaryGraph
    correction: FdrDecision
    kind: str
    per_edge: dict = field(default_factory=dict)
    per_node: dict = field(default_factory=dict)
    flagged_nodes: tuple[int, ...] = ()
    diagnostics: tuple = ()


def _empty_adjacency(n_nodes: int) -> np.ndarray:
    return np.zeros((n_nodes, n_nodes), dtype=np.uint8)


def _correct(p_values, base_rate: float, correction: str) -> FdrDecision:
    if correction == "fdr":
        return bh_fdr(p_values, base_rate)
    if correction == "none":
        return uncorrected(p_values, base_rate)
    raise ValidationError(f"correction must be one of {CORRECTIONS}, got {correction!r}")


def mean_spn(
    data: StudyDataset, condition: int, base_rate: float = 0.05, correction: str = "fdr"
) -> SpnResult:
    """Summary network of 'average connections' for one condition.

    Fisher-transforms every correlation, pools the grand mean and grand
    SD (unbiased) over all edges, subjects, and conditions, z-tests each
    edge's values for the chosen condition against those grand
    statistics, corrects, and keeps edges that are both significant and
    above the grand mean.

    A zero grand SD (fully constant dataset) degenerates every statistic
    to zero; a DegenerateStatisticsWarning is emitted and the network is
    empty.
    """
    if data.n_subjects < 2:
        raise ValidationError("mean SPN needs at least 2 subjects")
    if not 0 <= condition < data.n_conditions:
        raise ValidationError(
            f"condition index {condition} out of range 0..{data.n_conditions - 1}"
        )
    pairs = edge_pairs(data.n_nodes)
    z = fisher_z(data.edge_values())
    grand_mean = float(z.mean())
    grand_sd = float(z.std(ddof=1))

    # a constant dataset leaves only rounding noise (~1e-17) in the SD
    if grand_sd <= 1e-12 * max(1.0, abs(grand_mean)):
        warnings.warn(
            "grand SD is zero (constant dataset); mean SPN is empty",
            DegenerateStatisticsWarning,
            stacklevel=2,
        )
        results = [
            TestResult(0.0, 1.0, 0, (np.inf, np.inf)) for _ in pairs
        ]
    else:
        results = [
            grand_mean_z_test(z[:, condition, e], grand_mean, grand_sd)
            for e in range(len(pairs))
        ]

    decision = _correct([t.p_value for t in results], base_rate, correction)
    adjacency = _empty_adjacency(data.n_nodes)
    for e, (i, j) in enumerate(pairs):
        if decision.rejected[e] and results[e].effect_sign > 0:
            adjacency[i, j] = adjacency[j, i] = 1
    return SpnResult(
        network=BinaryGraph(data.node_labels, adjacency, data.node_coords),
        correction=decision,
        kind="mean",
        per_edge=dict(zip(pairs, results)),
    )


def differential_spn(
    data: StudyDataset, base_rate: float = 0.05, correction: str = "fdr"
) -> tuple[SpnResult, SpnResult]:
    """Upweighted and downweighted summary networks over the condition gradient.

    Fits the repeated-measures model per edge on the full n x J table of
    Fisher-z values, corrects the edge family once, and routes each
    surviving edge by the sign of its linear trend: positive to SPN+,
    negative to SPN-.  Significant edges with an exactly zero trend are
    listed in ``diagnostics`` of both results instead of either network.
    """
    if data.n_subjects < 2 or data.n_conditions < 2:
        raise ValidationError("differential SPN needs n >= 2 subjects and J >= 2 conditions")
    pairs = edge_pairs(data.n_nodes)
    z = fisher_z(data.edge_values())
    fits = [repeated_measures_fit(z[:, :, e]) for e in range(len(pairs))]
    decision = _correct([f.p_value for f in fits], base_rate, correction)

    adj_plus = _empty_adjacency(data.n_nodes)
    adj_minus = _empty_adjacency(data.n_nodes)
    zero_trend = []
    for e, (i, j) in enumerate(pairs):
        if not decision.rejected[e]:
            continue
        if fits[e].trend_sign > 0:
            adj_plus[i, j] = adj_plus[j, i] = 1
        elif fits[e].trend_sign < 0:
            adj_minus[i, j] = adj_minus[j, i] = 1
        else:
            zero_trend.append((i, j))
    per_edge = dict(zip(pairs, fits))
    diagnostics = tuple(zero_trend)
    plus = SpnResult(
        network=BinaryGraph(data.node_labels, adj_plus, data.node_coords),
        correction=decision,
        kind="differential_plus",
        per_edge=per_edge,
        diagnostics=diagnostics,
    )
    minus = SpnResult(
        network=BinaryGraph(data.node_labels, adj_minus, data.node_coords),
        correction=decision,
        kind="differential_minus",
        per_edge=per_edge,
        diagnostics=diagnostics,
    )
    return plus, minus


def node_differential_spn(
    data: NodeSignalDataset, base_rate: float = 0.05, correction: str = "fdr"
) -> tuple[SpnResult, SpnResult]:
    """Upweighted and downweighted vertex sets over the condition gradient.

    Applies the same repeated-measures model per vertex to the raw
    intensity signals.  The returned networks carry no edges; flagged
    vertices are in ``flagged_nodes``.
    """
    n, j, n_v = data.signals.shape
    if n < 2 or j < 2:
        raise ValidationError("node differential SPN needs n >= 2 and J >= 2")
    fits = [repeated_measures_fit(data.signals[:, :, v]) for v in range(n_v)]
    decision = _correct([f.p_value for f in fits], base_rate, correction)

    up, down = [], []
    for v in range(n_v):
        if not decision.rejected[v]:
            continue
        if fits[v].trend_sign > 0:
            up.append(v)
        elif fits[v].trend_sign < 0:
            down.append(v)
    per_node = dict(enumerate(fits))
    empty = BinaryGraph(data.node_labels, _empty_adjacency(n_v))
    plus = SpnResult(
        network=empty,
        correction=decision,
        kind="node_differential_plus",
        per_node=per_node,
        flagged_nodes=tuple(up),
    )
    minus = SpnResult(
        network=empty,
        correction=decision,
        kind="node_differential_minus",
        per_node=per_node,
        flagged_nodes=tuple(down),
    )
    return plus, minus
