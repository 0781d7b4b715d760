"""Image loading, color-space conversion, and display rescaling.

Images are plain numpy arrays throughout the toolkit:

* RGB / HSV images: float64 arrays of shape ``(H, W, 3)`` with channels in
  ``[0, 1]`` (hue is the angle normalized to ``[0, 1)``).
* Lab images: ``(H, W, 3)`` with L in ``[0, 100]`` and a/b roughly in
  ``[-128, 127]`` (CIELAB, D65 reference white, sRGB input assumed).
* Grayscale images: ``(H, W)`` linear luminance in ``[0, 1]``.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, IoError

DISPLAY_MAX_W = 1920
DISPLAY_MAX_H = 1200

# sRGB -> XYZ (D65) matrix and reference white.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.00000, 1.08883])

_LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])


def load_image(path) -> np.ndarray:
    """Decode a PNG or JPEG file into an RGB array with channels in [0, 1]."""
    p = Path(path)
    if not p.is_file():
        raise IoError(f"no such image file: {p}")
    try:
        with Image.open(p) as im:
            fmt = im.format
            if fmt not in ("PNG", "JPEG"):
                raise DecodeError(f"unsupported image format {fmt!r}: {p}")
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64)
    except UnidentifiedImageError as exc:
        raise DecodeError(f"cannot decode {p}: {exc}") from exc
    except OSError as exc:
        raise DecodeError(f"corrupt image data in {p}: {exc}") from exc
    return arr / 255.0


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    """Invert the sRGB transfer function, elementwise."""
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Per-pixel RGB -> HSV; achromatic pixels get hue 0 by convention."""
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    maxc = img.max(axis=-1)
    minc = img.min(axis=-1)
    delta = maxc - minc

    v = maxc
    s = np.zeros_like(maxc)
    np.divide(delta, maxc, out=s, where=maxc > 0)

    h = np.zeros_like(maxc)
    chroma = delta > 0
    rmax = chroma & (maxc == r)
    gmax = chroma & ~rmax & (maxc == g)
    bmax = chroma & ~rmax & ~gmax
    h[rmax] = (g[rmax] - b[rmax]) / delta[rmax]
    h[gmax] = (b[gmax] - r[gmax]) / delta[gmax] + 2.0
    h[bmax] = (r[bmax] - g[bmax]) / delta[bmax] + 4.0
    h = (h / 6.0) % 1.0
    return np.stack([h, s, v], axis=-1)


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Per-pixel sRGB -> linear RGB -> XYZ (D65) -> CIELAB."""
    lin = srgb_to_linear(img)
    xyz = lin @ _SRGB_TO_XYZ.T / _D65_WHITE
    eps = (6.0 / 29.0) ** 3
    f = np.where(xyz > eps, np.cbrt(xyz), xyz / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    lch = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    # Matrix rows do not sum to the white point exactly; clamp the ~1e-5 excess.
    lch = np.clip(lch, 0.0, 100.0)
    return np.stack([lch, a, b], axis=-1)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Linear luminance 0.2126 r + 0.7152 g + 0.0722 b on linearized channels."""
    lin = srgb_to_linear(img)
    return np.clip(lin @ _LUMA_WEIGHTS, 0.0, 1.0)


def resize_bilinear(img: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resample of an (H, W, C) float image to (height, width, C)."""
    planes = []
    for c in range(img.shape[2]):
        f32 = Image.fromarray(img[:, :, c].astype(np.float32), mode="F")
        planes.append(
            np.asarray(f32.resize((width, height), Image.BILINEAR), dtype=np.float64)
        )
    return np.stack(planes, axis=-1)


def display_rescale(
    img: np.ndarray, max_w: int = DISPLAY_MAX_W, max_h: int = DISPLAY_MAX_H
) -> np.ndarray:
    """Downscale to fit a max_w x max_h display, keeping aspect ratio.

    Images that already fit are returned unchanged; the function never
    upscales. Rescaled dimensions are rounded half-up with a 1 px floor.
    """
    h, w = img.shape[:2]
    if w <= max_w and h <= max_h:
        return img
    factor = min(max_w / w, max_h / h)
    new_w = max(1, int(math.floor(w * factor + 0.5)))
    new_h = max(1, int(math.floor(h * factor + 0.5)))
    return resize_bilinear(img, new_w, new_h)
