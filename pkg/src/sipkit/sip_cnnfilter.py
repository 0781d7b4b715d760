"""Image properties computed from first-layer CNN filter responses:
left-right / up-down symmetry, sparseness, and variability.

The convolution engine is self-contained; filter weights come from a FILB
file (see ``load_filter_bank`` for the binary layout).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionMismatch, FormatError, IoError, TruncatedFile
from .imgproc import resize_bilinear

FILB_MAGIC = b"FILB"
FILB_VERSION = 1
CONV_INPUT_SIZE = 227  # gives 55x55 maps with 11x11 stride-4 kernels


@dataclass(frozen=True)
class FilterBank:
    """Convolution filters with biases and a fixed stride."""

    weights: np.ndarray  # (num_filters, channels, kernel_h, kernel_w)
    biases: np.ndarray  # (num_filters,)
    stride: int

    @property
    def num_filters(self) -> int:
        return self.weights.shape[0]

    @property
    def channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_h(self) -> int:
        return self.weights.shape[2]

    @property
    def kernel_w(self) -> int:
        return self.weights.shape[3]


@dataclass(frozen=True)
class PooledMaps:
    """Max-pooled, post-ReLU response maps, one per filter; all entries >= 0."""

    maps: np.ndarray  # (num_filters, pool_h, pool_w)


def load_filter_bank(path) -> FilterBank:
    """Parse a FILB file.

    Layout (little-endian): magic ``FILB``, u32 version=1, u32 num_filters,
    u32 channels, u32 kernel_h, u32 kernel_w, u32 stride, float32 weights in
    filter-major/channel-major/row-major order, float32 biases.
    """
    p = Path(path)
    if not p.is_file():
        raise IoError(f"no such filter bank: {p}")
    data = p.read_bytes()
    header_size = 4 + 6 * 4
    if len(data) < header_size:
        raise TruncatedFile(f"{p}: file shorter than the FILB header")
    if data[:4] != FILB_MAGIC:
        raise FormatError(f"{p}: bad magic {data[:4]!r}")
    version, nf, ch, kh, kw, stride = struct.unpack_from("<6I", data, 4)
    if version != FILB_VERSION:
        raise FormatError(f"{p}: unsupported FILB version {version}")
    if min(nf, ch, kh, kw, stride) < 1:
        raise DimensionMismatch(f"{p}: zero dimension in header")
    n_weights = nf * ch * kh * kw
    expected = header_size + 4 * n_weights + 4 * nf
    if len(data) < expected:
        raise TruncatedFile(f"{p}: payload holds {len(data)} of {expected} bytes")
    if len(data) > expected:
        raise DimensionMismatch(f"{p}: {len(data) - expected} trailing bytes")
    weights = np.frombuffer(data, dtype="<f4", count=n_weights, offset=header_size)
    biases = np.frombuffer(data, dtype="<f4", count=nf, offset=header_size + 4 * n_weights)
    if not np.isfinite(weights).all() or not np.isfinite(biases).all():
        raise FormatError(f"{p}: non-finite filter weights")
    return FilterBank(
        weights=weights.astype(np.float64).reshape(nf, ch, kh, kw),
        biases=biases.astype(np.float64),
        stride=int(stride),
    )


def conv_responses(img: np.ndarray, bank: FilterBank) -> np.ndarray:
    """Valid-padding strided convolution + bias + ReLU; returns (F, oh, ow)."""
    if img.ndim != 3 or img.shape[2] != bank.channels:
        raise DimensionMismatch(
            f"image has {img.shape[2] if img.ndim == 3 else '?'} channels, "
            f"bank expects {bank.channels}"
        )
    win = sliding_window_view(img, (bank.kernel_h, bank.kernel_w), axis=(0, 1))
    win = win[:: bank.stride, :: bank.stride]
    resp = np.tensordot(win, bank.weights, axes=([2, 3, 4], [1, 2, 3])) + bank.biases
    return np.maximum(resp, 0.0).transpose(2, 0, 1)


def _pool_edges(n: int, grid: int) -> np.ndarray:
    # Near-equal tiles; remainder pixels are assigned to the last tile.
    base = n // grid
    edges = np.arange(grid + 1) * base
    edges[-1] = n
    return edges


def pooled_responses(
    img: np.ndarray, bank: FilterBank, pool_grid: int = 12, resize: bool = True
) -> PooledMaps:
    """Convolve, rectify, and max-pool each response map into a fixed grid.

    With ``resize`` (the default) the image is first bilinearly resized to
    227x227 so that 11x11 stride-4 kernels give 55x55 maps. The pool grid is
    clamped to the response-map size for small inputs.
    """
    if bank.channels != 3:
        raise DimensionMismatch(f"filter bank has {bank.channels} channels, need 3")
    arr = resize_bilinear(img, CONV_INPUT_SIZE, CONV_INPUT_SIZE) if resize else img
    resp = conv_responses(arr, bank)
    nf, oh, ow = resp.shape
    gy = min(pool_grid, oh)
    gx = min(pool_grid, ow)
    ye = _pool_edges(oh, gy)
    xe = _pool_edges(ow, gx)
    maps = np.empty((nf, gy, gx), dtype=np.float64)
    for i in range(gy):
        for j in range(gx):
            tile = resp[:, ye[i] : ye[i + 1], xe[j] : xe[j + 1]]
            maps[:, i, j] = tile.max(axis=(1, 2))
    return PooledMaps(maps=maps)


def flip_image(img: np.ndarray, axis: str) -> np.ndarray:
    if axis == "lr":
        return img[:, ::-1]
    if axis == "ud":
        return img[::-1]
    raise ValueError(f"axis must be 'lr' or 'ud', got {axis!r}")


def symmetry_from_maps(maps_a: np.ndarray, maps_b: np.ndarray) -> float:
    """Normalized L1 agreement of two pooled response stacks, in [0, 1]."""
    denom = np.abs(maps_a).sum() + np.abs(maps_b).sum()
    if denom == 0:
        return 1.0
    return float(1.0 - np.abs(maps_a - maps_b).sum() / denom)


def symmetry(img: np.ndarray, bank: FilterBank, axis: str, pool_grid: int = 12) -> float:
    """Mirror symmetry of pooled filter responses along 'lr' or 'ud'.

    Compares the pooled responses of the image with those of its flipped
    version; 1 means identical response patterns. Filters are not mirrored
    for the comparison.
    """
    r = pooled_responses(img, bank, pool_grid).maps
    rf = pooled_responses(flip_image(img, axis), bank, pool_grid).maps
    return symmetry_from_maps(r, rf)


def sparseness(maps: PooledMaps) -> float:
    """Median over filters of the per-map population variance."""
    per_map = maps.maps.reshape(maps.maps.shape[0], -1).var(axis=1)
    return float(np.median(per_map))


def variability(maps: PooledMaps) -> float:
    """Population variance over all entries of all pooled maps."""
    return float(maps.maps.var())
