"""Dataset ingestion, weight standardization, exporters, and the report pipeline.

Matrix files are headerless comma-separated full square matrices.  A
manifest (JSON, ``"schema": 1``) names subjects, gradient-ordered
conditions, node labels (with optional 3D coordinates, passed through to
DOT for external layout), and one matrix file per (subject, condition)
cell; file paths are resolved relative to the manifest.

Node label order in the manifest is authoritative: loading never
reorders nodes, and every exported artifact follows that order.  All
writers are deterministic (no timestamps), so a rerun with the same
inputs and options is byte-identical.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import density as density_mod
from . import graphs as graph_mod
from .errors import (
    DataError,
    DegenerateStatisticsWarning,
    IncompleteDesignError,
    SchemaError,
    ValidationError,
)
from .graphs import BinaryGraph, WeightedGraph, weighted_density
from .spn import NodeSignalDataset, SpnResult, StudyDataset, differential_spn, mean_spn
from .stats import fisher_z, fisher_z_inverse

MANIFEST_SCHEMA = 1
EXPORT_FORMATS = ("dot", "json", "csv")


@dataclass(frozen=True)
class ManifestOptions:
    standardize: bool = False
    base_rate: float = 0.05
    density_grid: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.base_rate < 1.0:
            raise SchemaError(f"base_rate must lie in (0, 1), got {self.base_rate!r}")


@dataclass(frozen=True, eq=False)
class Manifest:
    subjects: tuple[str, ...]
    conditions: tuple[str, ...]
    node_labels: tuple[str, ...]
    node_coords: np.ndarray | None
    files: dict
    signal_files: dict | None
    options: ManifestOptions
    root: Path


def parse_manifest(path) -> Manifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if raw.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(f"{path}: expected \"schema\": {MANIFEST_SCHEMA}, got {raw.get('schema')!r}")
    for key in ("subjects", "conditions", "nodes", "files"):
        if key not in raw:
            raise SchemaError(f"{path}: missing manifest key {key!r}")
    subjects = tuple(str(s) for s in raw["subjects"])
    conditions = tuple(str(c) for c in raw["conditions"])
    if len(set(subjects)) != len(subjects) or len(set(conditions)) != len(conditions):
        raise SchemaError(f"{path}: duplicate subject or condition ids")
    nodes = raw["nodes"]
    if "labels" not in nodes:
        raise SchemaError(f"{path}: nodes must carry a 'labels' list")
    labels = tuple(str(x) for x in nodes["labels"])
    coords = None
    if nodes.get("coords") is not None:
        coords = np.asarray(nodes["coords"], dtype=float)
        if coords.shape != (len(labels), 3):
            raise SchemaError(f"{path}: nodes.coords must be {len(labels)} 3-vectors")

    def check_cells(mapping, what: str) -> dict:
        cells = {}
        for subject, per_condition in mapping.items():
            if subject not in subjects:
                raise SchemaError(f"{path}: {what} names unknown subject {subject!r}")
            for condition, file_name in per_condition.items():
                if condition not in conditions:
                    raise SchemaError(f"{path}: {what} names unknown condition {condition!r}")
                cells[(subject, condition)] = path.parent / str(file_name)
        for subject in subjects:
            for condition in conditions:
                if (subject, condition) not in cells:
                    raise IncompleteDesignError(
                        f"{path}: {what} is missing cell (subject {subject!r}, condition {condition!r})"
                    )
        return cells

    files = check_cells(raw["files"], "files")
    signal_files = None
    if raw.get("signal_files") is not None:
        signal_files = check_cells(raw["signal_files"], "signal_files")

    opts = raw.get("options", {})
    grid = opts.get("density_grid")
    options = ManifestOptions(
        standardize=bool(opts.get("standardize", False)),
        base_rate=float(opts.get("base_rate", 0.05)),
        density_grid=tuple(int(k) for k in grid) if grid is not None else None,
        seed=int(opts.get("seed", 0)),
    )
    return Manifest(subjects, conditions, labels, coords, files, signal_files, options, path.parent)


def load_matrix_csv(path, n_nodes: int | None = None) -> np.ndarray:
    """Read one headerless comma-separated square matrix."""
    path = Path(path)
    try:
        matrix = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError:
        raise
    except ValueError as exc:
        raise DataError(f"{path}: cannot parse matrix: {exc}") from exc
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DataError(f"{path}: expected a square matrix, got shape {matrix.shape}")
    if n_nodes is not None and matrix.shape[0] != n_nodes:
        raise SchemaError(f"{path}: expected a {n_nodes}x{n_nodes} matrix, got {matrix.shape}")
    return matrix


def _validate_correlation_matrix(matrix: np.ndarray, path) -> np.ndarray:
    bad = np.argwhere(np.abs(matrix) > 1)
    if bad.size:
        i, j = (int(x) for x in bad[0])
        raise DataError(
            f"{path}: entry ({i},{j}) = {matrix[i, j]!r} outside the correlation range [-1, 1]"
        )
    try:
        return graph_mod.validate_symmetric_hollow(matrix, str(path))
    except ValidationError as exc:
        raise DataError(str(exc)) from exc


def load_dataset(manifest: Manifest | str | Path) -> StudyDataset:
    """Assemble the balanced subjects x conditions array from manifest files."""
    if not isinstance(manifest, Manifest):
        manifest = parse_manifest(manifest)
    n_v = len(manifest.node_labels)
    n, j = len(manifest.subjects), len(manifest.conditions)
    data = np.empty((n, j, n_v, n_v), dtype=float)
    for si, subject in enumerate(manifest.subjects):
        for ci, condition in enumerate(manifest.conditions):
            path = manifest.files[(subject, condition)]
            data[si, ci] = _validate_correlation_matrix(load_matrix_csv(path, n_v), path)
    return StudyDataset(
        correlations=data,
        node_labels=manifest.node_labels,
        condition_labels=manifest.conditions,
        subject_ids=manifest.subjects,
        node_coords=manifest.node_coords,
    )


def load_node_signals(manifest: Manifest | str | Path) -> NodeSignalDataset:
    """Assemble per-node signal vectors from the manifest's signal_files map."""
    if not isinstance(manifest, Manifest):
        manifest = parse_manifest(manifest)
    if manifest.signal_files is None:
        raise SchemaError("manifest has no 'signal_files' map")
    n_v = len(manifest.node_labels)
    n, j = len(manifest.subjects), len(manifest.conditions)
    signals = np.empty((n, j, n_v), dtype=float)
    for si, subject in enumerate(manifest.subjects):
        for ci, condition in enumerate(manifest.conditions):
            path = manifest.signal_files[(subject, condition)]
            try:
                vec = np.loadtxt(path, delimiter=",").ravel()
            except OSError:
                raise
            except ValueError as exc:
                raise DataError(f"{path}: cannot parse signal vector: {exc}") from exc
            if vec.size != n_v:
                raise SchemaError(f"{path}: expected {n_v} signal values, got {vec.size}")
            signals[si, ci] = vec
    return NodeSignalDataset(
        signals=signals,
        node_labels=manifest.node_labels,
        condition_labels=manifest.conditions,
        subject_ids=manifest.subjects,
    )


def association_graph(matrix, node_labels=None, node_coords=None, negatives: str = "error") -> WeightedGraph:
    """Turn a signed association matrix into a nonnegative WeightedGraph.

    negatives='error' refuses signed input (the analyst must decide);
    negatives='abs' takes absolute values first.
    """
    m = graph_mod.validate_symmetric_hollow(matrix, "association matrix")
    if negatives == "abs":
        m = np.abs(m)
    elif negatives == "error":
        if m.min() < 0:
            i, j = np.unravel_index(np.argmin(m), m.shape)
            raise DataError(
                f"association matrix has negative entry {m[i, j]!r} at ({i},{j}); "
                "rerun with absolute-value standardization to accept signed input"
            )
    else:
        raise ValidationError(f"negatives must be 'error' or 'abs', got {negatives!r}")
    if node_labels is None:
        node_labels = tuple(f"n{i}" for i in range(m.shape[0]))
    return WeightedGraph(tuple(node_labels), m, node_coords)


def standardize_weights(g: WeightedGraph) -> WeightedGraph:
    """Min-max rescale positive weights onto (0, 1]; zero entries stay zero.

    Strictly increasing on positives, so per-density edge selections are
    unchanged.
    """
    w = g.weights
    pos = w > 0
    values = w[pos]
    if np.unique(values).size < 2:
        raise ValidationError(
            "standardization needs at least two distinct positive weights"
        )
    w_min, w_max = float(values.min()), float(values.max())
    delta = (w_max - w_min) * 1e-6
    out = np.zeros_like(w)
    out[pos] = (w[pos] - w_min + delta) / (w_max - w_min + delta)
    return WeightedGraph(g.node_labels, out, g.node_coords)


# ---------------------------------------------------------------------------
# Exporters


def _quote(label: str) -> str:
    return '"' + label.replace('"', r"\"") + '"'


def _graph_payload(g) -> dict:
    payload: dict = {"schema": 1}
    if isinstance(g, BinaryGraph):
        payload["kind"] = "binary"
        payload["node_labels"] = list(g.node_labels)
        payload["node_coords"] = None if g.node_coords is None else g.node_coords.tolist()
        payload["adjacency"] = g.adjacency.astype(int).tolist()
    elif isinstance(g, WeightedGraph):
        payload["kind"] = "weighted"
        payload["node_labels"] = list(g.node_labels)
        payload["node_coords"] = None if g.node_coords is None else g.node_coords.tolist()
        payload["weights"] = g.weights.tolist()
    else:
        raise ValidationError(f"cannot export object of type {type(g).__name__}")
    return payload


def _to_dot(g) -> str:
    lines = ["graph spn {"]
    coords = g.node_coords
    for v, label in enumerate(g.node_labels):
        if coords is not None:
            x, y, z = (repr(float(c)) for c in coords[v])
            lines.append(f"  {_quote(label)} [pos=\"{x},{y},{z}!\"];")
        else:
            lines.append(f"  {_quote(label)};")
    if isinstance(g, BinaryGraph):
        for i, j in g.edges():
            lines.append(f"  {_quote(g.node_labels[i])} -- {_quote(g.node_labels[j])};")
    else:
        for i, j, w in g.positive_edges():
            lines.append(
                f"  {_quote(g.node_labels[i])} -- {_quote(g.node_labels[j])} [weight={w!r}];"
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _to_csv_text(g) -> str:
    if isinstance(g, BinaryGraph):
        rows = ([str(int(x)) for x in row] for row in g.adjacency)
    else:
        rows = ([repr(float(x)) for x in row] for row in g.weights)
    return "\n".join(",".join(row) for row in rows) + "\n"


def export_graph(g, fmt: str, path) -> Path:
    """Write a graph as DOT, JSON, or a raw CSV matrix.

    DOT embeds node coordinates as pin positions when present; the JSON
    form round-trips byte-identically through graph_from_json.
    """
    if fmt not in EXPORT_FORMATS:
        raise ValidationError(f"format must be one of {EXPORT_FORMATS}, got {fmt!r}")
    path = Path(path)
    try:
        if fmt == "dot":
            path.write_text(_to_dot(g))
        elif fmt == "json":
            path.write_text(json.dumps(_graph_payload(g), indent=2) + "\n")
        else:
            path.write_text(_to_csv_text(g))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def graph_from_json(path) -> BinaryGraph | WeightedGraph:
    path = Path(path)
    payload = json.loads(path.read_text())
    if payload.get("schema") != 1 or payload.get("kind") not in ("binary", "weighted"):
        raise SchemaError(f"{path}: not a graph JSON payload")
    labels = tuple(payload["node_labels"])
    coords = payload.get("node_coords")
    coords = None if coords is None else np.asarray(coords, dtype=float)
    if payload["kind"] == "binary":
        return BinaryGraph(labels, np.asarray(payload["adjacency"]), coords)
    return WeightedGraph(labels, np.asarray(payload["weights"], dtype=float), coords)


# ---------------------------------------------------------------------------
# Report pipeline


@dataclass(frozen=True, eq=False)
class ReportBundle:
    """In-memory results plus the files written by report_pipeline."""

    density_table: tuple
    mean_spns: dict
    differential: tuple[SpnResult, SpnResult]
    density_profiles: dict
    paths: tuple[Path, ...]
    warnings: tuple[str, ...] = ()


def safe_name(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in label)


def write_csv(path: Path, header: list[str], rows) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def condition_mean_matrix(data: StudyDataset, condition: int) -> np.ndarray:
    """Fisher-domain mean of one condition's matrices, back-transformed."""
    z = fisher_z(data.correlations[:, condition])
    return np.asarray(fisher_z_inverse(z.mean(axis=0)))


def write_mean_spn_stats(path, node_labels, result: SpnResult) -> Path:
    rows = [
        (
            i,
            j,
            node_labels[i],
            node_labels[j],
            repr(t.statistic),
            repr(t.p_value),
            t.effect_sign,
            int(result.correction.rejected[e]),
            int(bool(result.network.adjacency[i, j])),
        )
        for e, ((i, j), t) in enumerate(result.per_edge.items())
    ]
    return write_csv(
        Path(path),
        ["i", "j", "label_i", "label_j", "statistic", "p_value",
         "effect_sign", "rejected", "included"],
        rows,
    )


def write_differential_stats(path, node_labels, plus: SpnResult, minus: SpnResult) -> Path:
    rows = []
    for e, ((i, j), fit) in enumerate(plus.per_edge.items()):
        routed = "none"
        if plus.network.adjacency[i, j]:
            routed = "plus"
        elif minus.network.adjacency[i, j]:
            routed = "minus"
        rows.append(
            (
                i,
                j,
                node_labels[i],
                node_labels[j],
                repr(fit.f_statistic),
                repr(fit.p_value),
                fit.trend_sign,
                int(plus.correction.rejected[e]),
                routed,
            )
        )
    return write_csv(
        Path(path),
        ["i", "j", "label_i", "label_j", "f_statistic", "p_value",
         "trend_sign", "rejected", "routed"],
        rows,
    )


def write_node_differential_stats(path, node_labels, plus: SpnResult, minus: SpnResult) -> Path:
    rows = []
    for v, fit in plus.per_node.items():
        routed = "none"
        if v in plus.flagged_nodes:
            routed = "up"
        elif v in minus.flagged_nodes:
            routed = "down"
        rows.append(
            (
                v,
                node_labels[v],
                repr(fit.f_statistic),
                repr(fit.p_value),
                fit.trend_sign,
                int(plus.correction.rejected[v]),
                routed,
            )
        )
    return write_csv(
        Path(path),
        ["node", "label", "f_statistic", "p_value", "trend_sign", "rejected", "routed"],
        rows,
    )


def report_pipeline(
    data: StudyDataset,
    out_dir,
    base_rate: float = 0.05,
    correction: str = "fdr",
    negatives: str = "error",
    standardize: bool = False,
    metric: str = "global_efficiency",
    density_grid=None,
    fmt: str = "json",
) -> ReportBundle:
    """Emit the recommended reporting sequence into ``out_dir``.

    In order: (1) the per-subject-per-condition weighted density table,
    (2) one mean SPN per condition, (3) the differential SPN pair,
    (4) density-integrated metric profiles per condition (computed on
    the condition-mean association matrix).  Reruns with identical
    inputs and options produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metric_fn = density_mod.metric_by_name(metric)
    paths: list[Path] = []
    notes: list[str] = []

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateStatisticsWarning)

        # (1) weighted density per subject and condition
        table = []
        for si, subject in enumerate(data.subject_ids):
            for ci, condition in enumerate(data.condition_labels):
                g = association_graph(
                    data.correlations[si, ci], data.node_labels, negatives=negatives
                )
                table.append((subject, condition, weighted_density(g)))
        paths.append(
            write_csv(
                out / "01_weighted_density.csv",
                ["subject", "condition", "weighted_density"],
                ((s, c, repr(v)) for s, c, v in table),
            )
        )

        # (2) mean SPN per condition
        mean_results = {}
        for ci, condition in enumerate(data.condition_labels):
            result = mean_spn(data, ci, base_rate, correction)
            mean_results[condition] = result
            stem = out / f"02_mean_spn_{safe_name(condition)}"
            paths.append(export_graph(result.network, fmt, Path(str(stem) + "." + fmt)))
            paths.append(
                write_mean_spn_stats(Path(str(stem) + "_stats.csv"), data.node_labels, result)
            )

        # (3) differential SPN pair
        plus, minus = differential_spn(data, base_rate, correction)
        for tag, result in (("plus", plus), ("minus", minus)):
            target = out / f"03_differential_spn_{tag}.{fmt}"
            paths.append(export_graph(result.network, fmt, target))
        paths.append(
            write_differential_stats(
                out / "03_differential_stats.csv", data.node_labels, plus, minus
            )
        )

        # (4) density-integrated profiles per condition
        profiles = {}
        profile_rows = []
        summary_rows = []
        for ci, condition in enumerate(data.condition_labels):
            g = association_graph(
                condition_mean_matrix(data, ci), data.node_labels, negatives=negatives
            )
            if standardize:
                g = standardize_weights(g)
            profile = density_mod.density_integrated_metric(g, metric_fn, grid=density_grid)
            profiles[condition] = profile
            for k, mass, value in zip(profile.densities, profile.weights, profile.values):
                profile_rows.append((condition, k, repr(float(mass)), repr(float(value))))
            summary_rows.append((condition, metric, repr(profile.integrated)))
        paths.append(
            write_csv(
                out / "04_density_profiles.csv",
                ["condition", "k", "p_mass", "value"],
                profile_rows,
            )
        )
        paths.append(
            write_csv(
                out / "04_density_integrated.csv",
                ["condition", "metric", "integrated"],
                summary_rows,
            )
        )
        notes.extend(str(w.message) for w in caught)

    config = {
        "base_rate": base_rate,
        "correction": correction,
        "density_grid": list(density_grid) if density_grid is not None else None,
        "format": fmt,
        "metric": metric,
        "negatives": negatives,
        "standardize": standardize,
    }
    log_lines = ["report pipeline", "config: " + json.dumps(config, sort_keys=True)]
    log_lines += [f"warning: {note}" for note in notes]
    log_lines += [f"wrote: {p.name}" for p in paths]
    log_path = out / "run_log.txt"
    log_path.write_text("\n".join(log_lines) + "\n")
    paths.append(log_path)

    return ReportBundle(
        density_table=tuple(table),
        mean_spns=mean_results,
        differential=(plus, minus),
        density_profiles=profiles,
        paths=tuple(paths),
        warnings=tuple(notes),
    )
