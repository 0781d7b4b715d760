"""Console entry points: export-filters and export-activations."""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .export import ExportError, ExportJob, export_activations, export_filter_bank


def _parse_layers(text: str) -> tuple:
    layers = set()
    for part in text.split(","):
        m = re.fullmatch(r"(\d+)-(\d+)", part.strip())
        if m:
            layers.update(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            layers.add(int(part))
    return tuple(sorted(layers))


def main_filters(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="export-filters",
        description="Write the first conv layer of pretrained AlexNet as FILB.",
    )
    parser.add_argument("--out", required=True, help="output .filb path")
    args = parser.parse_args(argv)
    try:
        info = export_filter_bank(args.out)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {info['path']} ({info['num_filters']} filters, "
          f"{info['kernel'][0]}x{info['kernel'][1]}, stride {info['stride']})")
    return 0


def main_activations(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="export-activations",
        description="Write spatially mean-pooled VGG19 activations as ACTV files.",
    )
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--layers", default="1-16")
    parser.add_argument("--size", type=int, default=224)
    args = parser.parse_args(argv)
    job = ExportJob(
        manifest_path=Path(args.manifest),
        out_dir=Path(args.out),
        layers=_parse_layers(args.layers),
        size=args.size,
    )
    try:
        result = export_activations(job)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(result['files'])} layer files for "
          f"{result['n_images']} images to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main_filters())
