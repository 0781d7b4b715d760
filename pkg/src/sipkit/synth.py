"""Procedural test-image generator with ratings from a declared linear model.

The generator produces a desk-scale dataset (spectral noise with controlled
Fourier slope, gratings, symmetric/asymmetric shape compositions, and colored
gradients) plus a ratings manifest whose rating is a known linear function of
z-scored image properties with Gaussian noise. This gives analyses a ground
truth that real corpora cannot provide.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import SchemaError
from .imgproc import display_rescale, rgb_to_hsv, rgb_to_lab, to_grayscale
from .sip_basic import (
    GEOMETRY_SIPS,
    SIP_NAMES,
    color_sips,
    contrast_rms,
    geometry_sips,
    luminance_entropy,
)
from .sip_structure import (
    build_phog,
    edge_orientation_entropy,
    extract_edges,
    fourier_sips,
    phog_sips,
    radial_frequency_map,
)

DEFAULT_KINDS = ("noise", "grating", "composition", "gradient")

# Properties the generator can use as rating drivers (no filter bank needed).
SUPPORTED_MODEL_SIPS = tuple(
    n for n in SIP_NAMES
    if n not in ("symmetry_lr", "symmetry_ud", "sparseness", "variability")
)


@dataclass(frozen=True)
class SynthModel:
    """Declared generative rating model: rating = sum w_i * z(sip_i) + noise."""

    weights: dict  # sip name -> weight
    noise_sigma: float = 0.5
    rating_name: str = "rating"
    dataset_id: str = "synthetic"
    kinds: tuple = DEFAULT_KINDS
    size_range: tuple = (192, 320)

    def __post_init__(self):
        for name in self.weights:
            if name not in SUPPORTED_MODEL_SIPS:
                raise SchemaError(
                    f"model weight on unsupported property {name!r}; "
                    f"choose from {SUPPORTED_MODEL_SIPS}"
                )
        if self.noise_sigma < 0:
            raise SchemaError("noise_sigma must be >= 0")


def load_model_spec(path) -> SynthModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "weights" not in doc:
        raise SchemaError(f"{path}: model spec needs a 'weights' object")
    return SynthModel(
        weights={k: float(v) for k, v in doc["weights"].items()},
        noise_sigma=float(doc.get("noise_sigma", 0.5)),
        rating_name=doc.get("rating_name", "rating"),
        dataset_id=doc.get("dataset_id", "synthetic"),
        kinds=tuple(doc.get("kinds", DEFAULT_KINDS)),
        size_range=tuple(doc.get("size_range", (192, 320))),
    )


def spectral_noise(size: int, slope: float, seed, magnitudes: str = "noisy"):
    """Random-phase image whose radial power spectrum follows f**slope.

    ``magnitudes`` selects how coefficient magnitudes are set:

    * ``noisy``: white-noise magnitudes scaled by the target falloff, leaving
      realistic fluctuations around the target line (texture generation),
    * ``radial``: every coefficient gets power r**slope of its continuous
      radial frequency exactly (spectral-synthesis oracle),
    * ``annulus``: like radial but using the rounded integer annulus index,
      which makes the radially averaged log-log spectrum an exact line.
    """
    rng = np.random.default_rng(seed)
    spectrum = np.fft.fft2(rng.standard_normal((size, size)))
    if magnitudes == "annulus":
        r = radial_frequency_map(size).astype(np.float64)
    else:
        f = np.fft.fftfreq(size) * size
        r = np.hypot(f[:, None], f[None, :])
    scale = np.zeros_like(r)
    nonzero = r > 0
    scale[nonzero] = r[nonzero] ** (slope / 2.0)
    if magnitudes in ("radial", "annulus"):
        mag = np.abs(spectrum)
        mag[mag == 0] = 1.0
        spectrum = spectrum / mag
    elif magnitudes != "noisy":
        raise ValueError(f"unknown magnitude mode {magnitudes!r}")
    img = np.fft.ifft2(spectrum * scale).real
    lo, hi = img.min(), img.max()
    if hi == lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def _rand_color(rng, min_sep=0.25):
    a = rng.uniform(0.05, 0.95, size=3)
    b = rng.uniform(0.05, 0.95, size=3)
    while np.abs(a - b).max() < min_sep:
        b = rng.uniform(0.05, 0.95, size=3)
    return a, b


def _colorize(field01, color_a, color_b):
    return color_a + field01[..., None] * (color_b - color_a)


def _gen_noise(rng, h, w):
    side = max(h, w)
    slope = rng.uniform(-3.5, -1.0)
    base = spectral_noise(side, slope, rng.integers(0, 2**32))[:h, :w]
    # Standardize before applying an independent contrast factor, so the
    # image contrast does not inherit the spectral slope via normalization.
    z = (base - base.mean()) / (base.std() + 1e-12)
    sigma = rng.uniform(0.08, 0.30)
    fld = np.clip(0.5 + z * sigma, 0.0, 1.0)
    a, b = _rand_color(rng)
    return _colorize(fld, a, b)


def _gen_grating(rng, h, w):
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    freq = np.exp(rng.uniform(np.log(3.0), np.log(40.0)))
    theta = rng.uniform(0, np.pi)
    phase = rng.uniform(0, 2 * np.pi)
    carrier = (xx * np.cos(theta) + yy * np.sin(theta)) / max(h, w)
    amp = rng.uniform(0.2, 0.5)
    fld = 0.5 + amp * np.sin(2 * np.pi * freq * carrier + phase)
    a, b = _rand_color(rng)
    return _colorize(fld, a, b)


def _gen_composition(rng, h, w):
    bg, _ = _rand_color(rng)
    img = np.tile(bg, (h, w, 1))
    symmetric = rng.random() < 0.5
    yy, xx = np.mgrid[0:h, 0:w]
    # Symmetric variants draw only in the left half so the mirror fold
    # duplicates every shape instead of possibly erasing them all.
    cx_hi = 0.45 if symmetric else 0.9
    for _ in range(rng.integers(3, 9)):
        color = rng.uniform(0.05, 0.95, size=3)
        cy = rng.uniform(0.1, 0.9) * h
        cx = rng.uniform(0.1, cx_hi) * w
        ry = rng.uniform(0.05, 0.25) * h
        rx = rng.uniform(0.05, 0.25) * w
        if rng.random() < 0.5:
            mask = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        else:
            mask = (np.abs(yy - cy) <= ry) & (np.abs(xx - cx) <= rx)
        img[mask] = color
    if symmetric:
        half = w // 2
        img[:, w - half :] = img[:, :half][:, ::-1]
    return img


def _gen_gradient(rng, h, w):
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    theta = rng.uniform(0, 2 * np.pi)
    ramp = xx * np.cos(theta) + yy * np.sin(theta)
    lo, hi = ramp.min(), ramp.max()
    fld = (ramp - lo) / (hi - lo) if hi > lo else np.zeros_like(ramp)
    a, b = _rand_color(rng)
    img = _colorize(fld, a, b)
    # Noise floor proportional to the ramp amplitude, so the fitted spectral
    # slope varies with the (random) noise level rather than with contrast.
    rel = np.exp(rng.uniform(np.log(0.003), np.log(0.08)))
    img += rng.normal(0.0, rel * np.abs(b - a).max(), size=img.shape)
    return np.clip(img, 0.0, 1.0)


_GENERATORS = {
    "noise": _gen_noise,
    "grating": _gen_grating,
    "composition": _gen_composition,
    "gradient": _gen_gradient,
}


def generate_image(kind: str, rng, size_range) -> np.ndarray:
    lo, hi = size_range
    h = int(rng.integers(lo, hi + 1))
    w = int(rng.integers(lo, hi + 1))
    return _GENERATORS[kind](rng, h, w)


def compute_model_sips(rgb: np.ndarray, names, seed: int = 0) -> dict:
    """The subset of image properties a generative model may reference."""
    wanted = set(names)
    unsupported = wanted - set(SUPPORTED_MODEL_SIPS)
    if unsupported:
        raise SchemaError(f"unsupported model properties {sorted(unsupported)}")
    disp = display_rescale(rgb)
    color_names = {"hue", "saturation", "luminance", "lab_a", "lab_b", "color_entropy"}
    out = {}
    if wanted & ({"contrast", "luminance_entropy"} | color_names):
        lab = rgb_to_lab(disp)
        out["contrast"] = contrast_rms(lab)
        out["luminance_entropy"] = luminance_entropy(lab)
        if wanted & color_names:
            values = color_sips(rgb_to_hsv(disp), lab)
            out.update(zip(
                ("hue", "saturation", "luminance", "lab_a", "lab_b", "color_entropy"),
                values,
            ))
    if wanted & {"aspect_ratio", "image_size"}:
        out["aspect_ratio"], out["image_size"] = geometry_sips(
            disp.shape[1], disp.shape[0]
        )
    gray_names = {"edge_entropy", "self_similarity", "complexity", "anisotropy",
                  "fourier_slope", "fourier_sigma"}
    if wanted & gray_names:
        gray = to_grayscale(disp)
        if "edge_entropy" in wanted:
            out["edge_entropy"] = edge_orientation_entropy(
                extract_edges(gray), seed=seed
            )
        if wanted & {"self_similarity", "complexity", "anisotropy"}:
            ps = phog_sips(build_phog(gray))
            out["self_similarity"] = ps.self_similarity
            out["complexity"] = ps.complexity
            out["anisotropy"] = ps.anisotropy
        if wanted & {"fourier_slope", "fourier_sigma"}:
            out["fourier_slope"], out["fourier_sigma"] = fourier_sips(gray)
    return {name: out[name] for name in names}


def generate_dataset(n: int, seed: int, model: SynthModel, out_dir) -> dict:
    """Write n PNG images plus manifest.csv / meta.json under out_dir.

    Returns a summary dict with the manifest/meta paths and the generated
    property values the rating model was built from.
    """
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    needed = sorted(model.weights)
    ids = []
    sip_values = {name: np.empty(n) for name in needed}
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        kind = model.kinds[i % len(model.kinds)]
        img = generate_image(kind, rng, model.size_range)
        image_id = f"img_{i:04d}"
        ids.append(image_id)
        data = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(data, mode="RGB").save(images_dir / f"{image_id}.png")
        values = compute_model_sips(img, needed, seed=seed + i)
        for name in needed:
            sip_values[name][i] = values[name]

    # Dedicated substream for rating noise, disjoint from per-image streams.
    noise_rng = np.random.default_rng(np.random.SeedSequence((seed, n, 0x5EED)))
    raw = noise_rng.normal(0.0, model.noise_sigma, size=n)
    for name in needed:
        col = sip_values[name]
        sd = col.std()
        if sd == 0:
            raise SchemaError(f"generated {name!r} is constant; cannot z-score")
        raw = raw + model.weights[name] * (col - col.mean()) / sd
    lo, hi = raw.min(), raw.max()
    ratings = (raw - lo) / (hi - lo) if hi > lo else np.full(n, 0.5)

    manifest_path = out_dir / "manifest.csv"
    lines = [f"image_id,image_path,{model.rating_name}"]
    for image_id, rating in zip(ids, ratings):
        lines.append(f"{image_id},images/{image_id}.png,{float(rating)!r}")
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    meta_path = out_dir / "meta.json"
    meta = {
        "dataset_id": model.dataset_id,
        "scales": {model.rating_name: [0.0, 1.0]},
        "fixed_resolution": False,
        "generator": {
            "seed": seed,
            "weights": model.weights,
            "noise_sigma": model.noise_sigma,
            "kinds": list(model.kinds),
        },
    }
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return {
        "manifest": manifest_path,
        "meta": meta_path,
        "images_dir": images_dir,
        "model_sips": sip_values,
        "ratings": ratings,
        "image_ids": ids,
    }
