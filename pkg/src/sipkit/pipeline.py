"""Batch property computation and the report generators: descriptive boxplot
stats, correlation maps with pattern distances, forward-selected regression
reports, and the layer-probe / content-classification analysis.

All reports are deterministic functions of their inputs and seeds: per-image
work is keyed by image id and reduced in sorted order, never in completion
order.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .activations import ActivationMatrix, fit_pca, project
from .errors import (
    AlignmentError,
    DropBudgetExceeded,
    MissingActivations,
    SipkitError,
)
from .imgproc import display_rescale, load_image, rgb_to_hsv, rgb_to_lab, to_grayscale
from .manifest import RatingsManifest
from .sip_basic import (
    SIP_NAMES,
    SipTable,
    SipVector,
    color_sips,
    contrast_rms,
    geometry_sips,
    luminance_entropy,
)
from .sip_cnnfilter import (
    FilterBank,
    PooledMaps,
    flip_image,
    pooled_responses,
    sparseness,
    symmetry_from_maps,
    variability,
)
from .sip_structure import (
    build_phog,
    edge_orientation_entropy,
    extract_edges,
    fourier_sips,
    phog_sips,
)
from .stats import CorrelationMap, CvScheme, forward_select, pattern_distance, spearman
from .svm import svm_forward_select

log = logging.getLogger(__name__)

DROP_BUDGET = 0.05
SIGNIFICANCE_ALPHA = 0.05


@dataclass
class SipParams:
    """Tunable knobs of the structural property extractors."""

    max_edges: int = 10000
    edge_bins: int = 24
    max_pairs: int = 10**6
    phog_levels: int = 3
    phog_bins: int = 16
    fit_lo: float = 10.0
    fit_hi_frac: float = 0.5
    pool_grid: int = 12


@dataclass
class AnalysisRun:
    """One dataset's analysis state: subsample, property table, activations."""

    manifest: RatingsManifest
    seed: int
    selected_ids: list
    table: SipTable | None = None
    activations: dict = field(default_factory=dict)  # layer id -> ActivationMatrix
    out_dir: str | None = None


def worker_count() -> int:
    env = os.environ.get("SIPKIT_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def compute_sip_vector(
    rgb: np.ndarray,
    bank: FilterBank,
    *,
    seed: int = 0,
    with_geometry: bool = True,
    params: SipParams | None = None,
):
    """All 20 properties of one image; returns (SipVector, degeneracy flags)."""
    prm = params or SipParams()
    flags = []
    disp = display_rescale(rgb)
    hsv = rgb_to_hsv(disp)
    lab = rgb_to_lab(disp)
    gray = to_grayscale(disp)

    hue, sat, lum, lab_a, lab_b, col_ent = color_sips(hsv, lab)
    if with_geometry:
        aspect, size = geometry_sips(disp.shape[1], disp.shape[0])
    else:
        aspect = size = None

    edges = extract_edges(gray, prm.max_edges)
    edge_ent = edge_orientation_entropy(edges, prm.edge_bins, prm.max_pairs, seed)
    phog = phog_sips(build_phog(gray, prm.phog_levels, prm.phog_bins))
    if phog.degenerate:
        flags.append("phog_degenerate")
    slope, sigma = fourier_sips(gray, prm.fit_lo, prm.fit_hi_frac)

    base = pooled_responses(disp, bank, prm.pool_grid).maps
    sym_lr = symmetry_from_maps(
        base, pooled_responses(flip_image(disp, "lr"), bank, prm.pool_grid).maps
    )
    sym_ud = symmetry_from_maps(
        base, pooled_responses(flip_image(disp, "ud"), bank, prm.pool_grid).maps
    )
    pooled = PooledMaps(maps=base)
    vec = SipVector(
        hue=hue,
        saturation=sat,
        luminance=lum,
        lab_a=lab_a,
        lab_b=lab_b,
        color_entropy=col_ent,
        aspect_ratio=aspect,
        image_size=size,
        contrast=contrast_rms(lab),
        luminance_entropy=luminance_entropy(lab),
        edge_entropy=edge_ent,
        self_similarity=phog.self_similarity,
        complexity=phog.complexity,
        anisotropy=phog.anisotropy,
        fourier_slope=slope,
        fourier_sigma=sigma,
        symmetry_lr=sym_lr,
        symmetry_ud=sym_ud,
        sparseness=sparseness(pooled),
        variability=variability(pooled),
    )
    return vec, flags


def compute_sip_table(
    manifest: RatingsManifest,
    selected_ids,
    bank: FilterBank,
    seed: int = 0,
    threads: int | None = None,
    params: SipParams | None = None,
):
    """Property vectors for every selected image, computed in parallel.

    Per-image failures are logged and the image is dropped; a run fails when
    more than 5 percent of the requested images drop. Returns
    (SipTable, run_report dict).
    """
    ids = sorted(selected_ids)
    with_geometry = not manifest.fixed_resolution

    def work(item):
        index, image_id = item
        path = manifest.entries[image_id].image_path
        try:
            rgb = load_image(path)
            vec, flags = compute_sip_vector(
                rgb, bank, seed=_image_seed(seed, index), with_geometry=with_geometry,
                params=params,
            )
            return image_id, vec, flags, None
        except (SipkitError, ValueError) as exc:
            # data-driven failures (decode, degenerate image, out-of-range
            # property) drop the image; programming errors still propagate
            return image_id, None, [], f"{type(exc).__name__}: {exc}"

    n_workers = threads if threads is not None else worker_count()
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(work, enumerate(ids)))
    else:
        results = [work(item) for item in enumerate(ids)]

    rows = {}
    dropped = {}
    flag_map = {}
    for image_id, vec, flags, error in results:
        if error is not None:
            log.warning("dropping %s: %s", image_id, error)
            dropped[image_id] = error
        else:
            rows[image_id] = vec
            if flags:
                flag_map[image_id] = flags
    if len(dropped) > DROP_BUDGET * len(ids):
        raise DropBudgetExceeded(
            f"{len(dropped)}/{len(ids)} images failed (budget {DROP_BUDGET:.0%})"
        )
    table = SipTable(
        dataset_id=manifest.dataset_id, rows=rows,
        fixed_dims=manifest.fixed_resolution,
    )
    report = {
        "n_requested": len(ids),
        "n_computed": len(rows),
        "dropped": dropped,
        "flags": flag_map,
    }
    return table, report


def _image_seed(run_seed: int, index: int) -> int:
    return int(np.random.SeedSequence((run_seed, index)).generate_state(1)[0])


def report_descriptives(tables) -> list:
    """Min-max-scaled boxplot statistics per dataset and property.

    Quartiles use linear interpolation; whiskers are the most extreme values
    within 1.5 IQR of the quartiles. Constant columns scale to 0.5 and are
    flagged. Returns rows of
    (dataset, sip, q1, median, q3, whisker_lo, whisker_hi, n_outliers, flag).
    """
    out = []
    for table in tables:
        for name in SIP_NAMES:
            if table.fixed_dims and name in ("aspect_ratio", "image_size"):
                continue
            col = table.column(name)
            lo, hi = col.min(), col.max()
            if hi == lo:
                out.append((table.dataset_id, name, 0.5, 0.5, 0.5, 0.5, 0.5, 0,
                            "degenerate_scale"))
                continue
            scaled = (col - lo) / (hi - lo)
            q1, med, q3 = np.percentile(scaled, [25, 50, 75])
            iqr = q3 - q1
            in_lo = scaled[scaled >= q1 - 1.5 * iqr]
            in_hi = scaled[scaled <= q3 + 1.5 * iqr]
            wlo = float(in_lo.min())
            whi = float(in_hi.max())
            outliers = int(((scaled < wlo) | (scaled > whi)).sum())
            out.append((table.dataset_id, name, float(q1), float(med), float(q3),
                        wlo, whi, outliers, ""))
    return out


def align_ratings(table: SipTable, ratings: dict) -> np.ndarray:
    ids = table.image_ids()
    missing = [i for i in ids if i not in ratings]
    if missing:
        raise AlignmentError(
            f"{len(missing)} table ids missing from ratings, e.g. {missing[:3]}"
        )
    return np.array([ratings[i] for i in ids], dtype=np.float64)


def report_correlations(table: SipTable, ratings_by_name: dict) -> dict:
    """Spearman correlation of every property with each rating.

    ``ratings_by_name`` maps rating name -> {image_id -> rescaled value}.
    Geometry rows of fixed-resolution datasets are NaN. Returns a dict with
    the CorrelationMap, significance mask, positive/negative counts, and the
    dataset-internal pattern distances between rating columns.
    """
    cols = list(ratings_by_name)
    rho = np.full((len(SIP_NAMES), len(cols)), np.nan)
    pvals = np.full_like(rho, np.nan)
    for j, rating_name in enumerate(cols):
        y = align_ratings(table, ratings_by_name[rating_name])
        for i, sip in enumerate(SIP_NAMES):
            if table.fixed_dims and sip in ("aspect_ratio", "image_size"):
                continue
            r, p = spearman(table.column(sip), y)
            rho[i, j] = r
            pvals[i, j] = p
    cmap = CorrelationMap(rows=list(SIP_NAMES), cols=cols, rho=rho, p_values=pvals)
    significant = np.isfinite(pvals) & (pvals < SIGNIFICANCE_ALPHA)
    n_positive = (significant & (rho > 0)).sum(axis=0)
    n_negative = (significant & (rho < 0)).sum(axis=0)
    return {
        "map": cmap,
        "significant": significant,
        "n_positive": n_positive.tolist(),
        "n_negative": n_negative.tolist(),
        "distances": pattern_distance(cmap),
        "n_missing": int(np.isnan(rho).sum()),
    }


def layer_predictors(table: SipTable, matrix: ActivationMatrix, k: int = 20):
    """PCA-reduce one activation layer, aligned to the table's image order.

    Layers with fewer than ``k`` channels reduce to D - 1 components; the
    reduced count is visible in the returned names. Returns (names, columns).
    """
    ids = table.image_ids()
    index = {image_id: row for row, image_id in enumerate(matrix.image_ids)}
    missing = [i for i in ids if i not in index]
    if missing:
        raise AlignmentError(
            f"layer {matrix.layer_id}: {len(missing)} table ids missing from "
            f"activations, e.g. {missing[:3]}"
        )
    data = matrix.data[[index[i] for i in ids]]
    d = data.shape[1]
    k_eff = k if d >= k else d - 1
    k_eff = min(k_eff, len(ids) - 1)
    model = fit_pca(data, k_eff)
    names = [f"L{matrix.layer_id}:pc{c + 1:02d}" for c in range(k_eff)]
    return names, project(model, data)


def _predictor_matrix(table, source, activations, k=20):
    ids, sip_names, X_sips = table.to_matrix()
    if source == "sips":
        return sip_names, X_sips
    kind, _, layer_text = source.partition(":")
    layer = int(layer_text)
    if layer not in activations:
        raise MissingActivations(f"layer {layer} not loaded")
    pc_names, pcs = layer_predictors(table, activations[layer], k)
    if kind == "layer":
        return pc_names, pcs
    if kind == "sips+layer":
        return sip_names + pc_names, np.column_stack([X_sips, pcs])
    raise ValueError(f"unknown predictor source {source!r}")


def report_regression(
    table: SipTable,
    ratings: dict,
    rating_name: str,
    source: str,
    scheme: CvScheme,
    activations: dict | None = None,
) -> dict:
    """Forward-selected linear model of one rating from the chosen source.

    ``source`` is ``sips``, ``layer:K``, or ``sips+layer:K``. The report
    carries the selected predictors with standardized betas and their
    refit p-values (non-significant survivors are flagged, not removed),
    plus the mean CV-adjusted R^2.
    """
    names, X = _predictor_matrix(table, source, activations or {})
    y = align_ratings(table, ratings)
    model = forward_select(X, y, scheme, names=names)
    not_significant = [
        name
        for name, p in zip(model.selected, model.coef_p_values)
        if p >= SIGNIFICANCE_ALPHA
    ]
    return {
        "dataset_id": table.dataset_id,
        "rating": rating_name,
        "source": source,
        "n": model.n,
        "selected": model.selected,
        "standardized_betas": [float(b) for b in model.standardized_betas],
        "coef_p_values": [float(p) for p in model.coef_p_values],
        "non_significant_selected": not_significant,
        "r2_adjusted_cv": model.r2_adjusted_cv,
        "empty_model": not model.selected,
    }


def report_layer_probe(
    table: SipTable,
    activations: dict,
    scheme: CvScheme,
    layers=None,
    content_labels: dict | None = None,
    svm_c: float = 1.0,
) -> dict:
    """Predict each property from each layer's principal components.

    For every property and layer, a forward-selected linear model maps the
    layer's 20 PCA components onto the property; the table of CV-adjusted R^2
    values is the probe result. With content labels, an RBF-SVM with the same
    selection scheme classifies content per layer, and from the properties
    themselves as the comparison row.
    """
    wanted = sorted(activations) if layers is None else sorted(layers)
    absent = [k for k in wanted if k not in activations]
    if absent:
        raise MissingActivations(f"missing activation layers {absent}")
    sip_names = table.predictor_names()
    r2 = {}
    layer_cols = {}
    for layer in wanted:
        pc_names, pcs = layer_predictors(table, activations[layer])
        layer_cols[layer] = (pc_names, pcs)
        for sip in sip_names:
            y = table.column(sip)
            model = forward_select(pcs, y, scheme, names=pc_names)
            r2[(sip, layer)] = model.r2_adjusted_cv

    result = {
        "layers": wanted,
        "sips": sip_names,
        "r2_adjusted_cv": r2,
    }
    if content_labels is not None:
        ids = table.image_ids()
        missing = [i for i in ids if i not in content_labels]
        if missing:
            raise AlignmentError(
                f"{len(missing)} table ids missing content labels"
            )
        labels = np.array([content_labels[i] for i in ids])
        accuracy = {}
        for layer in wanted:
            pc_names, pcs = layer_cols[layer]
            z = _zscore(pcs)
            _, acc = svm_forward_select(z, labels, scheme, names=pc_names, C=svm_c)
            accuracy[f"layer:{layer}"] = acc
        _, names, X = table.to_matrix()
        _, acc = svm_forward_select(_zscore(X), labels, scheme, names=names, C=svm_c)
        accuracy["sips"] = acc
        result["content_accuracy"] = accuracy
    return result


def _zscore(X: np.ndarray) -> np.ndarray:
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - X.mean(axis=0)) / sd
