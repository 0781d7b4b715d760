"""Color, geometry, contrast, and entropy image properties, plus the
container types that hold one full 20-value property vector per image.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

# Canonical property names, in the fixed order used by every table and report.
SIP_NAMES = (
    "hue",
    "saturation",
    "luminance",
    "lab_a",
    "lab_b",
    "color_entropy",
    "aspect_ratio",
    "image_size",
    "contrast",
    "luminance_entropy",
    "edge_entropy",
    "self_similarity",
    "complexity",
    "anisotropy",
    "fourier_slope",
    "fourier_sigma",
    "symmetry_lr",
    "symmetry_ud",
    "sparseness",
    "variability",
)

# Geometry properties are dropped as predictors for fixed-resolution datasets.
GEOMETRY_SIPS = ("aspect_ratio", "image_size")

_BOUND_EPS = 1e-9


@dataclass(frozen=True)
class SipVector:
    """The 20 statistical image properties of a single image.

    ``aspect_ratio`` and ``image_size`` are None for images from
    fixed-resolution datasets, where they carry no information.
    """

    hue: float
    saturation: float
    luminance: float
    lab_a: float
    lab_b: float
    color_entropy: float
    aspect_ratio: float | None
    image_size: float | None
    contrast: float
    luminance_entropy: float
    edge_entropy: float
    self_similarity: float
    complexity: float
    anisotropy: float
    fourier_slope: float
    fourier_sigma: float
    symmetry_lr: float
    symmetry_ud: float
    sparseness: float
    variability: float

    def __post_init__(self):
        for name in SIP_NAMES:
            v = getattr(self, name)
            if v is None:
                if name not in GEOMETRY_SIPS:
                    raise ValueError(f"{name} may not be None")
                continue
            if not np.isfinite(v):
                raise ValueError(f"{name} is not finite: {v!r}")
        _check = self._check_bound
        _check("hue", 0.0, 1.0 - 1e-15)
        _check("saturation", 0.0, 1.0)
        _check("luminance", 0.0, 100.0)
        _check("color_entropy", 0.0, 8.0)
        _check("luminance_entropy", 0.0, 8.0)
        _check("symmetry_lr", 0.0, 1.0)
        _check("symmetry_ud", 0.0, 1.0)
        _check("self_similarity", 0.0, 1.0)
        for name in ("contrast", "edge_entropy", "complexity", "anisotropy",
                     "fourier_sigma", "sparseness", "variability"):
            _check(name, 0.0, None)
        if self.aspect_ratio is not None and self.aspect_ratio <= 0:
            raise ValueError("aspect_ratio must be positive")
        if self.image_size is not None and self.image_size <= 0:
            raise ValueError("image_size must be positive")

    def _check_bound(self, name, lo, hi):
        v = getattr(self, name)
        if v < lo - _BOUND_EPS or (hi is not None and v > hi + _BOUND_EPS):
            raise ValueError(f"{name}={v!r} outside [{lo}, {hi}]")

    def as_row(self) -> list:
        return [getattr(self, name) for name in SIP_NAMES]


assert tuple(f.name for f in fields(SipVector)) == SIP_NAMES


@dataclass
class SipTable:
    """Per-image property vectors for one dataset."""

    dataset_id: str
    rows: dict  # image_id -> SipVector
    fixed_dims: bool = False

    def __post_init__(self):
        for image_id, vec in self.rows.items():
            has_geom = vec.aspect_ratio is not None
            if has_geom == self.fixed_dims:
                raise ValueError(
                    f"{image_id}: geometry presence contradicts fixed_dims="
                    f"{self.fixed_dims}"
                )

    def image_ids(self) -> list:
        return sorted(self.rows)

    def predictor_names(self) -> list:
        """The usable predictor columns (18 for fixed-resolution datasets)."""
        if self.fixed_dims:
            return [n for n in SIP_NAMES if n not in GEOMETRY_SIPS]
        return list(SIP_NAMES)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(self.rows[i], name) for i in self.image_ids()],
                        dtype=np.float64)

    def to_matrix(self):
        """Return (image_ids, predictor_names, matrix) in canonical order."""
        ids = self.image_ids()
        names = self.predictor_names()
        X = np.array([[getattr(self.rows[i], n) for n in names] for i in ids],
                     dtype=np.float64)
        return ids, names, X

    def write_csv(self, path, metadata: dict | None = None) -> None:
        from .output import format_cell, metadata_block

        lines = metadata_block(dict(metadata or {}, dataset_id=self.dataset_id,
                                    fixed_resolution=self.fixed_dims))
        lines.append("image_id," + ",".join(SIP_NAMES))
        for image_id in self.image_ids():
            row = self.rows[image_id].as_row()
            lines.append(",".join([image_id] + [format_cell(v) for v in row]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def read_csv(cls, path):
        """Read a table written by :meth:`write_csv`; returns (table, metadata)."""
        meta = {}
        rows = {}
        with open(path, encoding="utf-8", newline="") as fh:
            data_lines = []
            for line in fh:
                if line.startswith("# "):
                    key, _, value = line[2:].partition(":")
                    meta[key.strip()] = value.strip()
                else:
                    data_lines.append(line)
        reader = csv.reader(data_lines)
        header = next(reader)
        if header != ["image_id", *SIP_NAMES]:
            raise ValueError(f"unexpected table header in {path}")
        for rec in reader:
            if not rec:
                continue
            values = [None if cell == "" else float(cell) for cell in rec[1:]]
            rows[rec[0]] = SipVector(*values)
        fixed = meta.get("fixed_resolution", "False") == "True"
        table = cls(dataset_id=meta.get("dataset_id", "unknown"), rows=rows,
                    fixed_dims=fixed)
        return table, meta


def shannon_entropy_bits(values: np.ndarray, bins: int, value_range) -> float:
    """Shannon entropy (log2) of a fixed-range histogram; 0*log0 taken as 0."""
    hist, _ = np.histogram(np.asarray(values).ravel(), bins=bins, range=value_range)
    total = hist.sum()
    if total == 0:
        return 0.0
    p = hist[hist > 0] / total
    return float(-(p * np.log2(p)).sum())


def circular_mean_01(values: np.ndarray) -> float:
    """Circular mean of angles expressed as fractions of a full turn."""
    ang = np.asarray(values, dtype=np.float64).ravel() * (2.0 * np.pi)
    mean = np.arctan2(np.sin(ang).mean(), np.cos(ang).mean())
    hue = float((mean / (2.0 * np.pi)) % 1.0)
    # float modulo of a tiny negative rounds to exactly 1.0; keep [0, 1)
    return 0.0 if hue >= 1.0 else hue


def color_sips(hsv: np.ndarray, lab: np.ndarray):
    """Color measures from matching HSV and Lab renderings of one image.

    Returns (hue, saturation, luminance, lab_a, lab_b, color_entropy). Hue is
    the circular mean of the hue angle; the other channel statistics are
    arithmetic means; color entropy is the Shannon entropy of a 256-bin hue
    histogram, so it is bounded by 8 bits.
    """
    hchan = hsv[..., 0]
    hue = circular_mean_01(hchan)
    saturation = float(hsv[..., 1].mean())
    luminance = float(lab[..., 0].mean())
    lab_a = float(lab[..., 1].mean())
    lab_b = float(lab[..., 2].mean())
    color_entropy = shannon_entropy_bits(hchan, 256, (0.0, 1.0))
    return hue, saturation, luminance, lab_a, lab_b, color_entropy


def geometry_sips(display_width: int, display_height: int):
    """Aspect ratio (w/h) and image size (w + h) of the displayed image."""
    if display_width < 1 or display_height < 1:
        raise ValueError("dimensions must be >= 1 px")
    return display_width / display_height, float(display_width + display_height)


def contrast_rms(lab: np.ndarray) -> float:
    """RMS contrast: population standard deviation of the Lab L channel."""
    return float(lab[..., 0].std())


def luminance_entropy(lab: np.ndarray) -> float:
    """Shannon entropy (log2, 256 bins over [0, 100]) of the Lab L channel."""
    return shannon_entropy_bits(lab[..., 0], 256, (0.0, 100.0))
