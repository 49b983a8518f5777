"""Command-line surface tying the pipelines together.

Subcommands: ``spn mean``, ``spn diff``, ``spn node-diff``, ``metrics``,
``density-profile``, ``simulate rewire``, ``simulate edges``, ``report``.
Exit codes: 0 success, 2 validation error, 3 I/O error, 4 degenerate
statistics under --strict.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import density as density_mod
from . import io as spnio
from .errors import DegenerateStatisticsError, DegenerateStatisticsWarning, ValidationError
from .graphs import global_efficiency, local_efficiency, spread_condition_holds, threshold, \
    weighted_density, weighted_efficiency
from .modularity import edges_sweep, randomness_sweep
from .spn import differential_spn, mean_spn, node_differential_spn


def _parse_grid(text: str) -> list[int]:
    """Parse '0,50,100' or inclusive 'start:stop[:step]' into a list of ints."""
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        if len(parts) == 2:
            start, stop, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ValidationError(f"bad grid syntax {text!r}")
        if step <= 0 or stop < start:
            raise ValidationError(f"bad grid range {text!r}")
        return list(range(start, stop + 1, step))
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _write_run_log(out_dir: Path, command: str, config: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    text = f"{command}\nconfig: {json.dumps(config, sort_keys=True)}\n"
    (out_dir / "run_log.txt").write_text(text)


def _resolve(args) -> tuple[spnio.Manifest, float, int]:
    manifest = spnio.parse_manifest(args.manifest)
    base_rate = args.base_rate if args.base_rate is not None else manifest.options.base_rate
    seed = args.seed if args.seed is not None else manifest.options.seed
    return manifest, base_rate, seed


def _condition_index(conditions: tuple[str, ...], value: str) -> int:
    if value in conditions:
        return conditions.index(value)
    try:
        idx = int(value)
    except ValueError:
        raise ValidationError(
            f"unknown condition {value!r}; choose from {list(conditions)} or an index"
        ) from None
    if not 0 <= idx < len(conditions):
        raise ValidationError(f"condition index {idx} out of range 0..{len(conditions) - 1}")
    return idx


def cmd_spn_mean(args) -> int:
    manifest, base_rate, _ = _resolve(args)
    data = spnio.load_dataset(manifest)
    ci = _condition_index(data.condition_labels, args.condition)
    result = mean_spn(data, ci, base_rate, args.correction)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"mean_spn_{spnio.safe_name(data.condition_labels[ci])}"
    graph_path = spnio.export_graph(result.network, args.format, f"{stem}.{args.format}")
    spnio.write_mean_spn_stats(f"{stem}_stats.csv", data.node_labels, result)
    _write_run_log(out, "spn mean", {
        "base_rate": base_rate, "condition": data.condition_labels[ci],
        "correction": args.correction, "format": args.format,
        "manifest": str(args.manifest),
    })
    print(f"mean SPN ({data.condition_labels[ci]}): {result.network.edge_count} edges -> {graph_path}")
    return 0


def cmd_spn_diff(args) -> int:
    manifest, base_rate, _ = _resolve(args)
    data = spnio.load_dataset(manifest)
    plus, minus = differential_spn(data, base_rate, args.correction)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for tag, result in (("plus", plus), ("minus", minus)):
        spnio.export_graph(result.network, args.format, out / f"differential_spn_{tag}.{args.format}")
    spnio.write_differential_stats(out / "differential_stats.csv", data.node_labels, plus, minus)
    _write_run_log(out, "spn diff", {
        "base_rate": base_rate, "correction": args.correction,
        "format": args.format, "manifest": str(args.manifest),
    })
    print(f"differential SPN+: {plus.network.edge_count} edges, "
          f"SPN-: {minus.network.edge_count} edges -> {out}")
    return 0


def cmd_spn_node_diff(args) -> int:
    manifest, base_rate, _ = _resolve(args)
    data = spnio.load_node_signals(manifest)
    plus, minus = node_differential_spn(data, base_rate, args.correction)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spnio.write_node_differential_stats(out / "node_differential_stats.csv",
                                        data.node_labels, plus, minus)
    payload = {
        "upweighted": [data.node_labels[v] for v in plus.flagged_nodes],
        "downweighted": [data.node_labels[v] for v in minus.flagged_nodes],
    }
    (out / "node_differential.json").write_text(json.dumps(payload, indent=2) + "\n")
    _write_run_log(out, "spn node-diff", {
        "base_rate": base_rate, "correction": args.correction, "manifest": str(args.manifest),
    })
    print(f"node differential SPN: {len(plus.flagged_nodes)} up, "
          f"{len(minus.flagged_nodes)} down -> {out}")
    return 0


def cmd_metrics(args) -> int:
    manifest, _, _ = _resolve(args)
    data = spnio.load_dataset(manifest)
    negatives = "abs" if args.abs else "error"
    rows = []
    for si, subject in enumerate(data.subject_ids):
        for ci, condition in enumerate(data.condition_labels):
            g = spnio.association_graph(data.correlations[si, ci], data.node_labels,
                                        negatives=negatives)
            row = [subject, condition, repr(weighted_density(g)),
                   repr(weighted_efficiency(g)), int(spread_condition_holds(g))]
            if args.tau is not None:
                bg = threshold(data.correlations[si, ci], args.tau)
                row += [bg.edge_count, repr(global_efficiency(bg)), repr(local_efficiency(bg))]
            rows.append(row)
    header = ["subject", "condition", "weighted_density", "weighted_efficiency",
              "spread_condition_holds"]
    if args.tau is not None:
        header += ["n_edges_tau", "global_efficiency_tau", "local_efficiency_tau"]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spnio.write_csv(out / "metrics.csv", header, rows)
    _write_run_log(out, "metrics", {
        "abs": args.abs, "manifest": str(args.manifest), "tau": args.tau,
    })
    print(f"metrics for {len(rows)} subject x condition cells -> {out / 'metrics.csv'}")
    return 0


def cmd_density_profile(args) -> int:
    manifest, _, _ = _resolve(args)
    data = spnio.load_dataset(manifest)
    negatives = "abs" if args.abs else "error"
    grid = _parse_grid(args.grid) if args.grid else manifest.options.density_grid
    metric_fn = density_mod.metric_by_name(args.metric)
    profile_rows, summary_rows = [], []
    for ci, condition in enumerate(data.condition_labels):
        g = spnio.association_graph(spnio.condition_mean_matrix(data, ci),
                                    data.node_labels, negatives=negatives)
        if args.standardize or manifest.options.standardize:
            g = spnio.standardize_weights(g)
        profile = density_mod.density_integrated_metric(g, metric_fn, grid=grid)
        for k, mass, value in zip(profile.densities, profile.weights, profile.values):
            profile_rows.append((condition, k, repr(float(mass)), repr(float(value))))
        summary_rows.append((condition, args.metric, repr(profile.integrated)))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spnio.write_csv(out / "density_profiles.csv",
                     ["condition", "k", "p_mass", "value"], profile_rows)
    spnio.write_csv(out / "density_integrated.csv",
                     ["condition", "metric", "integrated"], summary_rows)
    _write_run_log(out, "density-profile", {
        "abs": args.abs, "grid": grid if grid is None else list(grid),
        "manifest": str(args.manifest), "metric": args.metric,
        "standardize": bool(args.standardize or manifest.options.standardize),
    })
    print(f"density profiles ({args.metric}) for {len(summary_rows)} conditions -> {out}")
    return 0


def cmd_simulate_rewire(args) -> int:
    grid = _parse_grid(args.grid)
    seed = args.seed if args.seed is not None else 0
    sweep = randomness_sweep(args.n_v, args.n_e, grid, args.replicates, seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "rewire_sweep.csv"
    sweep.to_csv(target)
    _write_run_log(out, "simulate rewire", {
        "grid": grid, "n_e": args.n_e, "n_v": args.n_v,
        "replicates": args.replicates, "seed": seed,
    })
    print(f"rewiring sweep ({len(grid)} grid points x {args.replicates} replicates) -> {target}")
    return 0


def cmd_simulate_edges(args) -> int:
    grid = _parse_grid(args.edge_grid)
    seed = args.seed if args.seed is not None else 0
    sweep = edges_sweep(args.n_v, grid, args.topology, args.replicates, seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"edges_sweep_{args.topology}.csv"
    sweep.to_csv(target)
    _write_run_log(out, "simulate edges", {
        "edge_grid": grid, "n_v": args.n_v, "replicates": args.replicates,
        "seed": seed, "topology": args.topology,
    })
    print(f"edge sweep ({args.topology}) -> {target}")
    return 0


def cmd_report(args) -> int:
    manifest, base_rate, _ = _resolve(args)
    data = spnio.load_dataset(manifest)
    grid = _parse_grid(args.grid) if args.grid else manifest.options.density_grid
    bundle = spnio.report_pipeline(
        data,
        args.out_dir,
        base_rate=base_rate,
        correction=args.correction,
        negatives="abs" if args.abs else "error",
        standardize=bool(args.standardize or manifest.options.standardize),
        metric=args.metric,
        density_grid=grid,
        fmt=args.format,
    )
    if args.strict and bundle.warnings:
        raise DegenerateStatisticsError("; ".join(bundle.warnings))
    for note in bundle.warnings:
        print(f"warning: {note}", file=sys.stderr)
    print(f"report bundle: {len(bundle.paths)} files -> {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spnkit",
        description="Statistical parametric networks and density-aware topology metrics.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="output directory (default: .)")
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--strict", action="store_true",
                        help="treat degenerate statistics as an error (exit 4)")
    with_manifest = argparse.ArgumentParser(add_help=False)
    with_manifest.add_argument("--manifest", required=True, help="dataset manifest (JSON)")
    with_manifest.add_argument("--base-rate", type=float, default=None,
                               help="FDR base rate (default 0.05 or manifest option)")
    with_manifest.add_argument("--correction", choices=("fdr", "none"), default="fdr")
    with_manifest.add_argument("--abs", action="store_true",
                               help="take absolute values of signed associations")
    with_format = argparse.ArgumentParser(add_help=False)
    with_format.add_argument("--format", choices=("dot", "json", "csv"), default="json")

    sub = parser.add_subparsers(dest="command", required=True)

    spn = sub.add_parser("spn", help="build statistical parametric networks")
    spn_sub = spn.add_subparsers(dest="spn_command", required=True)
    p = spn_sub.add_parser("mean", parents=[common, with_manifest, with_format],
                           help="mean SPN for one condition")
    p.add_argument("--condition", required=True, help="condition label or index")
    p.set_defaults(func=cmd_spn_mean)
    p = spn_sub.add_parser("diff", parents=[common, with_manifest, with_format],
                           help="differential SPN+ / SPN-")
    p.set_defaults(func=cmd_spn_diff)
    p = spn_sub.add_parser("node-diff", parents=[common, with_manifest],
                           help="node-level differential SPN")
    p.set_defaults(func=cmd_spn_node_diff)

    p = sub.add_parser("metrics", parents=[common, with_manifest],
                       help="weighted density/efficiency per subject and condition")
    p.add_argument("--tau", type=float, default=None,
                   help="also threshold at tau and report binary metrics")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("density-profile", parents=[common, with_manifest],
                       help="density-integrated metric per condition")
    p.add_argument("--metric", choices=sorted(density_mod.METRICS), default="global_efficiency")
    p.add_argument("--grid", default=None, help="density grid: '1,2,3' or 'start:stop[:step]'")
    p.add_argument("--standardize", action="store_true")
    p.set_defaults(func=cmd_density_profile)

    sim = sub.add_parser("simulate", help="modularity-vs-density simulations")
    sim_sub = sim.add_subparsers(dest="simulate_command", required=True)
    p = sim_sub.add_parser("rewire", parents=[common], help="module count vs rewiring")
    p.add_argument("--n-v", type=int, default=112)
    p.add_argument("--n-e", type=int, required=True)
    p.add_argument("--grid", required=True, help="rewiring counts, e.g. '0:500:50'")
    p.add_argument("--replicates", type=int, default=100)
    p.set_defaults(func=cmd_simulate_rewire)
    p = sim_sub.add_parser("edges", parents=[common], help="module count vs edge count")
    p.add_argument("--n-v", type=int, default=112)
    p.add_argument("--edge-grid", required=True, help="edge counts, e.g. '100,600,1100'")
    p.add_argument("--topology", choices=("lattice", "random"), required=True)
    p.add_argument("--replicates", type=int, default=100)
    p.set_defaults(func=cmd_simulate_edges)

    p = sub.add_parser("report", parents=[common, with_manifest, with_format],
                       help="full reporting sequence")
    p.add_argument("--metric", choices=sorted(density_mod.METRICS), default="global_efficiency")
    p.add_argument("--grid", default=None)
    p.add_argument("--standardize", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "strict", False):
        warnings.simplefilter("error", DegenerateStatisticsWarning)
    try:
        return args.func(args)
    except DegenerateStatisticsWarning as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return 4
    except DegenerateStatisticsError as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
