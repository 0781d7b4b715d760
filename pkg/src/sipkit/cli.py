"""Command-line entry point.

Subcommands:
  sips compute      compute the property table for a manifest subsample
  analyze correlate correlation map + rating-internal pattern distances
  analyze regress   forward-selected linear model of one rating
  analyze distance  cross-dataset distances from several correlation maps
  analyze probe     property-onto-layer mapping and content classification
  synth generate    build a synthetic dataset with a declared rating model

The SIPKIT_THREADS environment variable caps the worker pool.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .activations import read_activations
from .errors import MissingActivations, SipkitError
from .manifest import load_manifest, rescale_ratings, subsample
from .output import base_metadata, format_cell, read_csv, write_csv, write_json
from .pipeline import (
    SipParams,
    compute_sip_table,
    report_correlations,
    report_descriptives,
    report_layer_probe,
    report_regression,
)
from .sip_basic import SIP_NAMES, SipTable
from .sip_cnnfilter import load_filter_bank
from .stats import CorrelationMap, CvScheme, pattern_distance
from .synth import SynthModel, generate_dataset, load_model_spec


def _add_manifest_args(p):
    p.add_argument("--manifest", required=True, help="manifest CSV path")
    p.add_argument("--meta", required=True, help="meta JSON path")


def _add_scheme_args(p):
    p.add_argument("--reps", type=int, default=100, help="CV repetitions")
    p.add_argument("--folds", type=int, default=2, help="CV folds (must be 2)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sipkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sipkit {__version__}")
    top = parser.add_subparsers(dest="group", required=True)

    sips = top.add_parser("sips", help="property extraction").add_subparsers(
        dest="command", required=True
    )
    comp = sips.add_parser("compute", help="compute a property table")
    _add_manifest_args(comp)
    comp.add_argument("--filters", required=True, help="FILB filter bank")
    comp.add_argument("--seed", type=int, default=0)
    comp.add_argument("--out", required=True)
    comp.add_argument("--n", type=int, default=500, help="subsample size")
    comp.add_argument("--threads", type=int, default=None)
    comp.add_argument("--max-edges", type=int, default=10000)
    comp.add_argument("--edge-bins", type=int, default=24)
    comp.add_argument("--max-pairs", type=int, default=10**6)
    comp.add_argument("--fit-lo", type=float, default=10.0)
    comp.add_argument("--fit-hi-frac", type=float, default=0.5)
    comp.add_argument("--pool-grid", type=int, default=12)
    comp.add_argument("--emit-svg", action="store_true")

    analyze = top.add_parser("analyze", help="statistical reports").add_subparsers(
        dest="command", required=True
    )
    corr = analyze.add_parser("correlate")
    _add_manifest_args(corr)
    corr.add_argument("--sips", required=True, help="property table CSV")
    corr.add_argument("--rating", action="append", default=None,
                      help="rating name (repeatable; default: all)")
    corr.add_argument("--seed", type=int, default=0)
    corr.add_argument("--out", required=True)
    corr.add_argument("--emit-svg", action="store_true")

    reg = analyze.add_parser("regress")
    _add_manifest_args(reg)
    reg.add_argument("--sips", required=True)
    reg.add_argument("--rating", required=True)
    reg.add_argument("--source", default="sips",
                     help="sips | layer:K | sips+layer:K")
    reg.add_argument("--activations", default=None, help="directory of ACTV files")
    _add_scheme_args(reg)
    reg.add_argument("--out", required=True)

    dist = analyze.add_parser("distance")
    dist.add_argument("--maps", nargs="+", required=True,
                      help="correlation CSVs from analyze correlate")
    dist.add_argument("--out", required=True)
    dist.add_argument("--emit-svg", action="store_true")

    probe = analyze.add_parser("probe")
    probe.add_argument("--sips", required=True)
    probe.add_argument("--activations", required=True)
    probe.add_argument("--layers", default=None, help="e.g. 1-16 or 1,3,13")
    probe.add_argument("--content-csv", default=None,
                       help="CSV with image_id,label columns")
    _add_scheme_args(probe)
    probe.add_argument("--out", required=True)
    probe.add_argument("--emit-svg", action="store_true")

    synth = top.add_parser("synth", help="synthetic data").add_subparsers(
        dest="command", required=True
    )
    gen = synth.add_parser("generate")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--model", required=True, help="model spec JSON")
    gen.add_argument("--out", required=True)
    return parser


def parse_layers(text: str) -> list:
    layers = set()
    for part in text.split(","):
        m = re.fullmatch(r"(\d+)-(\d+)", part.strip())
        if m:
            layers.update(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            layers.add(int(part))
    return sorted(layers)


def load_activation_dir(path, layers=None) -> dict:
    """Read layer_NN.actv files from a directory, keyed by layer id."""
    directory = Path(path)
    out = {}
    for f in sorted(directory.glob("layer_*.actv")):
        matrix = read_activations(f)
        out[matrix.layer_id] = matrix
    if layers is not None:
        missing = [k for k in layers if k not in out]
        if missing:
            raise MissingActivations(f"no ACTV files for layers {missing} in {directory}")
        out = {k: out[k] for k in layers}
    if not out:
        raise MissingActivations(f"no ACTV files found in {directory}")
    return out


def _cmd_sips_compute(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(args.manifest, args.meta)
    bank = load_filter_bank(args.filters)
    ids = subsample(manifest, args.n, args.seed)
    params = SipParams(
        max_edges=args.max_edges,
        edge_bins=args.edge_bins,
        max_pairs=args.max_pairs,
        fit_lo=args.fit_lo,
        fit_hi_frac=args.fit_hi_frac,
        pool_grid=args.pool_grid,
    )
    table, run_report = compute_sip_table(
        manifest, ids, bank, seed=args.seed, threads=args.threads, params=params
    )
    meta = base_metadata(seed=args.seed, subsample_n=args.n)
    table_path = out_dir / f"sips_{manifest.dataset_id}.csv"
    table.write_csv(table_path, metadata=meta)
    write_json(out_dir / f"run_{manifest.dataset_id}.json", run_report, meta)
    rows = report_descriptives([table])
    write_csv(
        out_dir / f"descriptives_{manifest.dataset_id}.csv",
        ["dataset", "sip", "q1", "median", "q3", "whisker_lo", "whisker_hi",
         "n_outliers", "flag"],
        rows,
        meta,
    )
    if args.emit_svg:
        _render_descriptives_svg(rows, out_dir / f"descriptives_{manifest.dataset_id}.svg")
    print(f"wrote {table_path} ({run_report['n_computed']} rows)")
    return 0


def _ratings_by_name(manifest, names):
    return {name: rescale_ratings(manifest, name) for name in names}


def _cmd_analyze_correlate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(args.manifest, args.meta, check_images=False)
    table, _ = SipTable.read_csv(args.sips)
    names = args.rating or manifest.rating_names()
    report = report_correlations(table, _ratings_by_name(manifest, names))
    cmap = report["map"]
    meta = base_metadata(seed=args.seed, dataset_id=table.dataset_id,
                         alpha=0.05, n_missing=report["n_missing"])
    header = ["sip"]
    for col in cmap.cols:
        header += [f"{col}_rho", f"{col}_p", f"{col}_significant"]
    rows = []
    for i, sip in enumerate(cmap.rows):
        row = [sip]
        for j in range(len(cmap.cols)):
            rho = cmap.rho[i, j]
            row += [
                None if np.isnan(rho) else rho,
                None if np.isnan(rho) else cmap.p_values[i, j],
                bool(report["significant"][i, j]),
            ]
        rows.append(row)
    for label, counts in (("#positive", report["n_positive"]),
                          ("#negative", report["n_negative"])):
        row = [label]
        for c in counts:
            row += [c, None, None]
        rows.append(row)
    path = out_dir / f"correlations_{table.dataset_id}.csv"
    write_csv(path, header, rows, meta)
    dist = report["distances"]
    write_csv(
        out_dir / f"rating_distances_{table.dataset_id}.csv",
        ["rating", *cmap.cols],
        [[cmap.cols[i], *dist[i]] for i in range(len(cmap.cols))],
        meta,
    )
    if args.emit_svg:
        _render_heatmap_svg(
            cmap.rho, cmap.rows, cmap.cols, out_dir / f"correlations_{table.dataset_id}.svg",
            center_zero=True,
        )
    print(f"wrote {path}")
    return 0


def _cmd_analyze_regress(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(args.manifest, args.meta, check_images=False)
    table, _ = SipTable.read_csv(args.sips)
    scheme = CvScheme(repetitions=args.reps, folds=args.folds, seed=args.seed)
    activations = {}
    if args.source != "sips":
        if not args.activations:
            raise MissingActivations(f"--activations required for source {args.source}")
        layer = int(args.source.rpartition(":")[2])
        activations = load_activation_dir(args.activations, [layer])
    ratings = rescale_ratings(manifest, args.rating)
    report = report_regression(
        table, ratings, args.rating, args.source, scheme, activations
    )
    meta = base_metadata(seed=args.seed, reps=args.reps, source=args.source)
    slug = args.source.replace(":", "").replace("+", "_")
    path = out_dir / f"regression_{table.dataset_id}_{args.rating}_{slug}.json"
    write_json(path, report, meta)
    write_csv(
        path.with_suffix(".csv"),
        ["predictor", "standardized_beta", "p_value"],
        list(zip(report["selected"], report["standardized_betas"],
                 report["coef_p_values"])),
        dict(meta, r2_adjusted_cv=report["r2_adjusted_cv"]),
    )
    print(f"wrote {path} (cv adjusted R^2 = {report['r2_adjusted_cv']:.4f})")
    return 0


def _cmd_analyze_distance(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_cols = []
    col_rho = []
    for map_path in args.maps:
        meta, header, rows = read_csv(map_path)
        dataset = meta.get("dataset_id", Path(map_path).stem)
        sip_rows = {r[0]: r for r in rows if not r[0].startswith("#")}
        rho_cols = [h for h in header if h.endswith("_rho")]
        for col_name in rho_cols:
            j = header.index(col_name)
            vec = []
            for sip in SIP_NAMES:
                cell = sip_rows[sip][j]
                vec.append(np.nan if cell == "" else float(cell))
            label = f"{dataset}:{col_name[: -len('_rho')]}"
            all_cols.append(label)
            col_rho.append(vec)
    rho = np.array(col_rho).T
    cmap = CorrelationMap(rows=list(SIP_NAMES), cols=all_cols, rho=rho,
                          p_values=np.zeros_like(rho))
    dist = pattern_distance(cmap)
    meta = base_metadata(n_maps=len(args.maps))
    path = out_dir / "pattern_distances.csv"
    write_csv(path, ["dataset", *all_cols],
              [[all_cols[i], *dist[i]] for i in range(len(all_cols))], meta)
    if args.emit_svg:
        _render_heatmap_svg(dist, all_cols, all_cols,
                            out_dir / "pattern_distances.svg", center_zero=False)
    print(f"wrote {path}")
    return 0


def _cmd_analyze_probe(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table, _ = SipTable.read_csv(args.sips)
    layers = parse_layers(args.layers) if args.layers else None
    activations = load_activation_dir(args.activations, layers)
    scheme = CvScheme(repetitions=args.reps, folds=args.folds, seed=args.seed)
    content = None
    if args.content_csv:
        _, header, rows = read_csv(args.content_csv)
        if header[:2] != ["image_id", "label"]:
            raise SipkitError("content CSV must have header image_id,label")
        content = {r[0]: r[1] for r in rows}
    result = report_layer_probe(table, activations, scheme, content_labels=content)
    meta = base_metadata(seed=args.seed, reps=args.reps)
    header = ["sip"] + [f"layer_{k}" for k in result["layers"]]
    rows = [
        [sip] + [result["r2_adjusted_cv"][(sip, k)] for k in result["layers"]]
        for sip in result["sips"]
    ]
    path = out_dir / "probe_r2.csv"
    write_csv(path, header, rows, meta)
    if content is not None:
        acc = result["content_accuracy"]
        write_csv(
            out_dir / "content_accuracy.csv",
            ["predictors", "cv_accuracy"],
            sorted(acc.items()),
            meta,
        )
    if args.emit_svg:
        matrix = np.array([[result["r2_adjusted_cv"][(sip, k)] for k in result["layers"]]
                           for sip in result["sips"]])
        _render_heatmap_svg(matrix, result["sips"],
                            [f"L{k}" for k in result["layers"]],
                            out_dir / "probe_r2.svg", center_zero=False)
    print(f"wrote {path}")
    return 0


def _cmd_synth_generate(args) -> int:
    model = load_model_spec(args.model)
    summary = generate_dataset(args.n, args.seed, model, args.out)
    print(f"wrote {summary['manifest']} with {args.n} images")
    return 0


def _render_descriptives_svg(rows, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = sorted({r[1] for r in rows})
    fig, ax = plt.subplots(figsize=(10, 4))
    for idx, name in enumerate(names):
        for r in rows:
            if r[1] != name:
                continue
            q1, med, q3, wlo, whi = r[2:7]
            ax.vlines(idx, wlo, whi, color="0.6")
            ax.vlines(idx, q1, q3, color="C0", lw=6)
            ax.plot(idx, med, "k_", ms=10)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=90, fontsize=6)
    ax.set_ylabel("scaled value")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _render_heatmap_svg(matrix, row_labels, col_labels, path, center_zero):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matrix = np.asarray(matrix, dtype=float)
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(col_labels)),
                                    max(3, 0.25 * len(row_labels))))
    if center_zero:
        bound = np.nanmax(np.abs(matrix)) or 1.0
        im = ax.imshow(matrix, cmap="coolwarm", vmin=-bound, vmax=bound)
    else:
        im = ax.imshow(matrix, cmap="viridis")
    ax.set_xticks(range(len(col_labels)))
    ax.set_xticklabels(col_labels, rotation=90, fontsize=6)
    ax.set_yticks(range(len(row_labels)))
    ax.set_yticklabels(row_labels, fontsize=6)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


_COMMANDS = {
    ("sips", "compute"): _cmd_sips_compute,
    ("analyze", "correlate"): _cmd_analyze_correlate,
    ("analyze", "regress"): _cmd_analyze_regress,
    ("analyze", "distance"): _cmd_analyze_distance,
    ("analyze", "probe"): _cmd_analyze_probe,
    ("synth", "generate"): _cmd_synth_generate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = _COMMANDS[(args.group, args.command)]
    try:
        return handler(args)
    except SipkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
