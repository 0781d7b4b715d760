"""Ingest per-layer CNN activation vectors from ACTV files and reduce each
layer to its strongest principal components.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    FormatError,
    IoError,
    NonFiniteData,
    RankError,
    TruncatedFile,
)

ACTV_MAGIC = b"ACTV"
ACTV_VERSION = 1
POOLING_SPATIAL_MEAN = 1


@dataclass(frozen=True)
class ActivationMatrix:
    """Per-image descriptor vectors for one convolutional layer."""

    layer_id: int
    image_ids: list
    data: np.ndarray  # (N, D)


@dataclass(frozen=True)
class PcaModel:
    """Mean vector plus orthonormal principal axes, strongest variance first."""

    mean: np.ndarray  # (D,)
    components: np.ndarray  # (k, D), orthonormal rows
    explained_variance: np.ndarray  # (k,), nonincreasing


def read_activations(path) -> ActivationMatrix:
    """Parse an ACTV file.

    Layout (little-endian): magic ``ACTV``, u32 version=1, u32 layer_id,
    u32 N, u32 D, u8 pooling tag (1 = spatial mean), N image-id records
    (u16 length + UTF-8 bytes) in row order, then N*D float32 row-major.
    """
    p = Path(path)
    if not p.is_file():
        raise IoError(f"no such activation file: {p}")
    data = p.read_bytes()
    header_size = 4 + 4 * 4 + 1
    if len(data) < header_size:
        raise TruncatedFile(f"{p}: file shorter than the ACTV header")
    if data[:4] != ACTV_MAGIC:
        raise FormatError(f"{p}: bad magic {data[:4]!r}")
    version, layer_id, n, d = struct.unpack_from("<4I", data, 4)
    pooling = data[20]
    if version != ACTV_VERSION:
        raise FormatError(f"{p}: unsupported ACTV version {version}")
    if pooling != POOLING_SPATIAL_MEAN:
        raise FormatError(f"{p}: unknown pooling tag {pooling}")
    if not 1 <= layer_id <= 16:
        raise FormatError(f"{p}: layer_id {layer_id} outside 1..16")
    if n < 2 or d < 1:
        raise FormatError(f"{p}: implausible dims N={n}, D={d}")

    offset = header_size
    image_ids = []
    for _ in range(n):
        if offset + 2 > len(data):
            raise TruncatedFile(f"{p}: truncated in image-id records")
        (length,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + length > len(data):
            raise TruncatedFile(f"{p}: truncated image id")
        image_ids.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    if len(set(image_ids)) != n:
        raise FormatError(f"{p}: duplicate image ids")

    need = offset + n * d * 4
    if len(data) < need:
        raise TruncatedFile(f"{p}: payload holds {len(data)} of {need} bytes")
    if len(data) > need:
        raise FormatError(f"{p}: {len(data) - need} trailing bytes")
    matrix = np.frombuffer(data, dtype="<f4", count=n * d, offset=offset)
    matrix = matrix.astype(np.float64).reshape(n, d)
    finite = np.isfinite(matrix).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise NonFiniteData(f"{p}: non-finite activation in row {bad}")
    return ActivationMatrix(layer_id=int(layer_id), image_ids=image_ids, data=matrix)


def fit_pca(data: np.ndarray, k: int = 20) -> PcaModel:
    """Top-k principal components of mean-centered data via SVD.

    The sign of each component is fixed so that its largest-magnitude
    coordinate is positive, making fits deterministic. Explained variances
    use the sample (N-1) normalization.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an (N, D) matrix with N >= 2")
    n, d = X.shape
    if k > min(n - 1, d):
        raise RankError(f"k={k} exceeds min(N-1, D)={min(n - 1, d)}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    components = vt[:k].copy()
    explained = (s[:k] ** 2) / (n - 1)
    anchor = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(k), anchor])
    signs[signs == 0] = 1.0
    components *= signs[:, None]
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def project(model: PcaModel, data: np.ndarray) -> np.ndarray:
    """Project rows of ``data`` onto the model's components."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.mean.shape[0]:
        raise DimensionMismatch(
            f"data has {X.shape[-1]} columns, model expects {model.mean.shape[0]}"
        )
    return (X - model.mean) @ model.components.T
