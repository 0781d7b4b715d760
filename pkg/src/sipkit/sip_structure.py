"""Structural image properties: pairwise edge-orientation entropy, the three
gradient-pyramid measures (self-similarity, complexity, anisotropy), and the
two radial Fourier-spectrum measures (slope and sigma).

All gradients come from one shared Sobel operator so the edge and pyramid
measures stay mutually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DegenerateImage, ImageTooSmall, InsufficientEdges


@dataclass(frozen=True)
class EdgeSet:
    """Strong-gradient pixels with their axial orientations in [0, pi)."""

    positions: np.ndarray  # (n, 2) integer (x, y)
    orientations: np.ndarray  # (n,) radians in [0, pi)
    magnitudes: np.ndarray  # (n,) gradient magnitude > 0


@dataclass(frozen=True)
class OrientationPyramid:
    """Gradient-orientation histograms over a quadtree tiling.

    ``levels[k]`` has shape (2**k, 2**k, bins); entry mass is accumulated
    gradient magnitude. Bins cover the signed gradient direction [0, 360).
    """

    levels: list
    bins: int
    pixel_count: int


@dataclass(frozen=True)
class RadialSpectrum:
    """Mean Fourier power per integer-frequency annulus, DC excluded."""

    frequencies: np.ndarray  # cycles/image, strictly increasing
    power: np.ndarray


class PhogSips(NamedTuple):
    self_similarity: float
    complexity: float
    anisotropy: float
    degenerate: bool


def sobel_gradients(gray: np.ndarray):
    """Sobel x/y derivatives with reflected boundaries."""
    gx = ndimage.sobel(gray, axis=1, mode="reflect")
    gy = ndimage.sobel(gray, axis=0, mode="reflect")
    return gx, gy


def extract_edges(gray: np.ndarray, max_edges: int = 10000) -> EdgeSet:
    """Keep the ``max_edges`` strongest-gradient pixels as edge elements.

    Orientations are folded into the axial range [0, pi). Raises
    DegenerateImage when no pixel has a nonzero gradient.
    """
    if min(gray.shape) < 3:
        raise ImageTooSmall("edge extraction needs at least a 3x3 image")
    gx, gy = sobel_gradients(gray)
    mag = np.hypot(gx, gy)
    flat = mag.ravel()
    nonzero = int(np.count_nonzero(flat))
    if nonzero == 0:
        raise DegenerateImage("zero gradient everywhere")
    keep = min(max_edges, nonzero)
    order = np.argsort(-flat, kind="stable")[:keep]
    ys, xs = np.unravel_index(order, mag.shape)
    theta = np.arctan2(gy, gx).ravel()[order] % np.pi
    return EdgeSet(
        positions=np.column_stack([xs, ys]).astype(np.int64),
        orientations=theta,
        magnitudes=flat[order],
    )


def _fold_axial(d: np.ndarray) -> np.ndarray:
    # Difference of two axial orientations, folded into [0, pi/2].
    return np.minimum(d, np.pi - d)


def _pair_hist_exhaustive(theta: np.ndarray, bins: int) -> np.ndarray:
    hist = np.zeros(bins, dtype=np.float64)
    block = 1024
    n = theta.size
    for start in range(0, n, block):
        blk = theta[start : start + block]
        diff = np.abs(blk[:, None] - theta[None, start:])
        iu = np.triu_indices(n=blk.size, m=n - start, k=1)
        d = _fold_axial(diff[iu])
        h, _ = np.histogram(d, bins=bins, range=(0.0, np.pi / 2))
        hist += h
    return hist


def _pair_hist_sampled(theta, bins, max_pairs, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = theta.size
    i = rng.integers(0, n, size=max_pairs)
    j = rng.integers(0, n, size=max_pairs)
    clash = i == j
    while clash.any():
        j[clash] = rng.integers(0, n, size=int(clash.sum()))
        clash = i == j
    d = _fold_axial(np.abs(theta[i] - theta[j]))
    hist, _ = np.histogram(d, bins=bins, range=(0.0, np.pi / 2))
    return hist.astype(np.float64)


def edge_orientation_entropy(
    edges: EdgeSet, bins: int = 24, max_pairs: int = 10**6, seed: int = 0
) -> float:
    """Second-order entropy of pairwise relative edge orientations.

    Every unordered pair of edge elements contributes the absolute difference
    of its two orientations, folded axially into [0, pi/2] (so that uniformly
    distributed orientations give a uniform difference distribution). The
    result is the Shannon entropy (log2) of a ``bins``-bin histogram of these
    differences. When the number of pairs exceeds ``max_pairs``, a uniform
    seeded sample of pairs is used instead of full enumeration.
    """
    theta = edges.orientations
    n = theta.size
    if n < 2:
        raise InsufficientEdges("need at least 2 edge elements")
    total_pairs = n * (n - 1) // 2
    if total_pairs <= max_pairs:
        hist = _pair_hist_exhaustive(theta, bins)
    else:
        hist = _pair_hist_sampled(theta, bins, max_pairs, seed)
    p = hist[hist > 0] / hist.sum()
    return float(-(p * np.log2(p)).sum())


def _partition_edges(n: int, parts: int) -> np.ndarray:
    # Near-equal contiguous partition boundaries: parts+1 edges from 0 to n.
    return (np.arange(parts + 1) * n) // parts


def build_phog(gray: np.ndarray, levels: int = 3, bins: int = 16) -> OrientationPyramid:
    """Magnitude-weighted orientation histograms for a quadtree of cells.

    Level k tiles the image into 2**k x 2**k near-equal cells; each cell gets a
    ``bins``-bin histogram of the signed Sobel gradient direction, weighted by
    gradient magnitude.
    """
    h, w = gray.shape
    if h < 2**levels or w < 2**levels:
        raise ImageTooSmall(f"need at least {2 ** levels} px per side")
    gx, gy = sobel_gradients(gray)
    mag = np.hypot(gx, gy)
    direction = np.arctan2(gy, gx) % (2.0 * np.pi)
    bin_idx = np.minimum((direction / (2.0 * np.pi) * bins).astype(np.int64), bins - 1)

    level_hists = []
    for lev in range(levels + 1):
        g = 2**lev
        ye = _partition_edges(h, g)
        xe = _partition_edges(w, g)
        row_cell = np.searchsorted(ye[1:], np.arange(h), side="right")
        col_cell = np.searchsorted(xe[1:], np.arange(w), side="right")
        key = (row_cell[:, None] * g + col_cell[None, :]) * bins + bin_idx
        hist = np.bincount(key.ravel(), weights=mag.ravel(), minlength=g * g * bins)
        level_hists.append(hist.reshape(g, g, bins))
    return OrientationPyramid(levels=level_hists, bins=bins, pixel_count=h * w)


def phog_sips(pyr: OrientationPyramid) -> PhogSips:
    """Self-similarity, complexity, and anisotropy from an orientation pyramid.

    * complexity: mean gradient magnitude over all pixels,
    * self-similarity: median histogram-intersection similarity between each
      deepest-level cell and the whole image (both L1-normalized; zero-mass
      cells count as similarity 0),
    * anisotropy: population variance of the 16 normalized root-histogram bins.

    Images with (near-)zero total gradient mass return zeros with the
    ``degenerate`` flag set instead of raising, so batch runs can skip them.
    """
    root = pyr.levels[0][0, 0]
    mass = float(root.sum())
    if mass < 1e-9:
        return PhogSips(0.0, 0.0, 0.0, True)
    complexity = mass / pyr.pixel_count
    q = root / mass
    deepest = pyr.levels[-1].reshape(-1, pyr.bins)
    cell_mass = deepest.sum(axis=1)
    sims = np.zeros(deepest.shape[0])
    ok = cell_mass > 0
    p = deepest[ok] / cell_mass[ok, None]
    sims[ok] = np.minimum(p, q[None, :]).sum(axis=1)
    return PhogSips(float(np.median(sims)), complexity, float(q.var()), False)


def radial_frequency_map(n: int) -> np.ndarray:
    """Integer annulus index (rounded radial frequency) for an n x n FFT grid."""
    f = np.fft.fftfreq(n) * n
    r = np.hypot(f[:, None], f[None, :])
    return np.rint(r).astype(np.int64)


def radial_spectrum(gray: np.ndarray) -> RadialSpectrum:
    """Radially averaged Fourier power spectrum of the center-square crop."""
    h, w = gray.shape
    side = min(h, w)
    y0 = (h - side) // 2
    x0 = (w - side) // 2
    sq = gray[y0 : y0 + side, x0 : x0 + side]
    sq = sq - sq.mean()
    power = np.abs(np.fft.fft2(sq)) ** 2
    idx = radial_frequency_map(side)
    nyquist = side // 2
    sums = np.bincount(idx.ravel(), weights=power.ravel())
    counts = np.bincount(idx.ravel())
    k = np.arange(1, nyquist + 1)
    return RadialSpectrum(
        frequencies=k.astype(np.float64), power=sums[1 : nyquist + 1] / counts[1 : nyquist + 1]
    )


def fourier_sips(gray: np.ndarray, fit_lo: float = 10.0, fit_hi_frac: float = 0.5):
    """Slope and sigma of the log-log radial power spectrum.

    A least-squares line is fit to log10(power) against log10(frequency) for
    annuli with fit_lo <= f <= fit_hi_frac * Nyquist; ``slope`` is the fitted
    slope and ``sigma`` the root-mean-square residual. Annuli with zero power
    are excluded from the fit; if none remain the image is degenerate. No
    window function is applied before the FFT.
    """
    side = min(gray.shape)
    if side < 64:
        raise ImageTooSmall("need at least 64 px on the shorter side")
    spec = radial_spectrum(gray)
    hi = fit_hi_frac * (side // 2)
    in_range = (spec.frequencies >= fit_lo) & (spec.frequencies <= hi)
    freq = spec.frequencies[in_range]
    power = spec.power[in_range]
    positive = power > 0
    if not positive.any():
        raise DegenerateImage("no spectral power in the fit range")
    logf = np.log10(freq[positive])
    logp = np.log10(power[positive])
    slope, intercept = np.polyfit(logf, logp, 1)
    resid = logp - (slope * logf + intercept)
    sigma = float(np.sqrt(np.mean(resid**2)))
    return float(slope), sigma
