"""Report serialization: UTF-8 CSV/JSON with a deterministic metadata block.

CSV reports start with ``# key: value`` comment lines; JSON reports carry the
same keys under a top-level ``metadata`` object. Nothing time-dependent is
ever written, so reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__

# Convention flags stamped into every report so downstream consumers know
# which of the underdetermined method choices this build uses.
DECISION_FLAGS = (
    "hue_mean=circular",
    "entropy_bins=256_log2",
    "edge_orientation_entropy=pairwise_orientation_only;axial_fold;sampled_pairs",
    "phog=sobel;signed_360_bins;deepest_level_vs_root",
    "fourier=center_crop;no_window;integer_annuli",
    "symmetry=unmirrored_filter_comparison",
    "cv_adjusted_r2=holdout_adjust_then_average",
    "forward_selection=strict_improvement;fresh_splits_per_step",
)


def base_metadata(seed=None, **extra) -> dict:
    meta = {"tool": "sipkit", "tool_version": __version__}
    if seed is not None:
        meta["seed"] = seed
    meta.update(extra)
    meta["decisions"] = ";".join(DECISION_FLAGS)
    return meta


def format_cell(value) -> str:
    """Deterministic CSV cell text; None becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def metadata_block(meta: dict) -> list:
    return [f"# {key}: {format_cell(value)}" for key, value in meta.items()]


def write_csv(path, header, rows, metadata: dict | None = None) -> None:
    lines = metadata_block(metadata or {})
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path):
    """Read a metadata-block CSV; returns (metadata, header, rows of str).

    Metadata lines start with "# " (hash space); row labels like "#positive"
    have no space and stay data.
    """
    meta = {}
    header = None
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith("# "):
            key, _, value = line[2:].partition(":")
            meta[key.strip()] = value.strip()
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, header, rows


def write_json(path, payload: dict, metadata: dict | None = None) -> None:
    doc = {"metadata": metadata or {}}
    doc.update(payload)
    text = json.dumps(doc, indent=2, default=_jsonify)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _jsonify(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value)!r}")
