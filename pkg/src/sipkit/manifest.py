"""Dataset manifests: image paths plus aesthetic ratings and scale metadata.

A manifest is a CSV with header ``image_id,image_path,<rating>...`` next to a
meta JSON declaring ``dataset_id``, per-rating ``scales`` ([min, max]), and
the ``fixed_resolution`` flag.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MissingImage, ScaleViolation, SchemaError, ZeroWidthScale


@dataclass(frozen=True)
class ManifestEntry:
    image_path: Path
    ratings: dict  # rating name -> raw value


@dataclass(frozen=True)
class RatingsManifest:
    dataset_id: str
    entries: dict  # image_id -> ManifestEntry
    scales: dict  # rating name -> (scale_min, scale_max)
    fixed_resolution: bool

    def image_ids(self) -> list:
        return sorted(self.entries)

    def rating_names(self) -> list:
        return list(self.scales)


def load_manifest(csv_path, meta_path, check_images: bool = True) -> RatingsManifest:
    """Load and validate a ratings manifest.

    Raises SchemaError for malformed files, ScaleViolation when a raw rating
    leaves its declared scale, and MissingImage when an image path does not
    resolve.
    """
    csv_path = Path(csv_path)
    meta_path = Path(meta_path)
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read meta JSON {meta_path}: {exc}") from exc
    for key in ("dataset_id", "scales", "fixed_resolution"):
        if key not in meta:
            raise SchemaError(f"{meta_path}: missing key {key!r}")
    scales = {}
    for name, pair in meta["scales"].items():
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise SchemaError(f"{meta_path}: scale for {name!r} must be [min, max]")
        scales[name] = (float(pair[0]), float(pair[1]))
    if not scales:
        raise SchemaError(f"{meta_path}: at least one rating scale required")

    try:
        with open(csv_path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(row for row in fh if not row.startswith("#"))
            header = next(reader, None)
            if header is None:
                raise SchemaError(f"{csv_path}: empty manifest")
            if header[:2] != ["image_id", "image_path"]:
                raise SchemaError(
                    f"{csv_path}: header must start with image_id,image_path"
                )
            rating_names = header[2:]
            if set(rating_names) != set(scales):
                raise SchemaError(
                    f"{csv_path}: rating columns {rating_names} do not match "
                    f"declared scales {sorted(scales)}"
                )
            entries = {}
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise SchemaError(f"{csv_path}:{lineno}: wrong column count")
                image_id = rec[0]
                if image_id in entries:
                    raise SchemaError(f"{csv_path}:{lineno}: duplicate id {image_id}")
                path = Path(rec[1])
                if not path.is_absolute():
                    path = csv_path.parent / path
                ratings = {}
                for name, cell in zip(rating_names, rec[2:]):
                    try:
                        value = float(cell)
                    except ValueError as exc:
                        raise SchemaError(
                            f"{csv_path}:{lineno}: bad rating {cell!r}"
                        ) from exc
                    lo, hi = scales[name]
                    if not lo <= value <= hi:
                        raise ScaleViolation(
                            f"{csv_path}:{lineno}: {name}={value} outside "
                            f"[{lo}, {hi}]"
                        )
                    ratings[name] = value
                if check_images and not path.is_file():
                    raise MissingImage(f"{csv_path}:{lineno}: {path} not found")
                entries[image_id] = ManifestEntry(image_path=path, ratings=ratings)
    except OSError as exc:
        raise SchemaError(f"cannot read manifest {csv_path}: {exc}") from exc
    if not entries:
        raise SchemaError(f"{csv_path}: manifest has no rows")
    return RatingsManifest(
        dataset_id=str(meta["dataset_id"]),
        entries=entries,
        scales=scales,
        fixed_resolution=bool(meta["fixed_resolution"]),
    )


def subsample(manifest: RatingsManifest, n: int = 500, seed: int = 0) -> list:
    """Uniform sample of image ids without replacement, deterministic per seed.

    Returns all ids (sorted) when the manifest holds fewer than ``n``. One
    sample per manifest; analyses of different rating names share it.
    """
    ids = manifest.image_ids()
    if len(ids) <= n:
        return ids
    rng = np.random.default_rng(np.random.SeedSequence((seed, len(ids))))
    chosen = rng.choice(len(ids), size=n, replace=False)
    return sorted(ids[i] for i in chosen)


def rescale_ratings(manifest: RatingsManifest, rating_name: str) -> dict:
    """Map raw ratings onto [0, 1] using the declared scale."""
    if rating_name not in manifest.scales:
        raise SchemaError(f"unknown rating {rating_name!r}")
    lo, hi = manifest.scales[rating_name]
    if hi == lo:
        raise ZeroWidthScale(f"scale for {rating_name!r} has zero width")
    return {
        image_id: (entry.ratings[rating_name] - lo) / (hi - lo)
        for image_id, entry in manifest.entries.items()
    }
