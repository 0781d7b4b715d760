"""Serialize pretrained-CNN data for the analysis toolkit.

Two jobs:

* the first convolution layer of a pretrained AlexNet-style network goes
  into a FILB file (the toolkit's filter-bank format),
* spatially mean-pooled activations of the 16 VGG19 convolutional layers go
  into one ACTV file per layer.

This package talks to the analysis toolkit only through those file formats;
it never imports it. Inference runs on CPU in eval mode with no gradients,
so identical jobs produce byte-identical files.

FILB layout (little-endian): magic ``FILB``, u32 version=1, u32 num_filters,
u32 channels, u32 kernel_h, u32 kernel_w, u32 stride, float32 weights in
filter/channel/row-major order, float32 biases.

ACTV layout (little-endian): magic ``ACTV``, u32 version=1, u32 layer_id,
u32 N, u32 D, u8 pooling tag (1 = spatial mean), N image-id records
(u16 length + UTF-8 bytes) in row order, N*D float32 row-major.
"""

from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

log = logging.getLogger(__name__)

FILB_MAGIC = b"FILB"
ACTV_MAGIC = b"ACTV"
POOLING_SPATIAL_MEAN = 1
VGG19_CONV_CHANNELS = (64, 64, 128, 128, 256, 256, 256, 256,
                       512, 512, 512, 512, 512, 512, 512, 512)
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
DROP_BUDGET = 0.05


class ExportError(Exception):
    pass


class ModelUnavailable(ExportError):
    """Pretrained weights could not be loaded or look wrong."""


class WriteError(ExportError):
    pass


@dataclass(frozen=True)
class ExportJob:
    """Configuration for an activation export run."""

    manifest_path: Path
    out_dir: Path
    layers: tuple = tuple(range(1, 17))
    size: int = 224
    mean: tuple = IMAGENET_MEAN
    std: tuple = IMAGENET_STD

    def __post_init__(self):
        bad = [k for k in self.layers if not 1 <= k <= 16]
        if bad:
            raise ValueError(f"layer ids outside 1..16: {bad}")


def write_filb(path, weights: np.ndarray, biases: np.ndarray, stride: int) -> None:
    nf, ch, kh, kw = weights.shape
    blob = FILB_MAGIC + struct.pack("<6I", 1, nf, ch, kh, kw, stride)
    blob += np.ascontiguousarray(weights, dtype="<f4").tobytes()
    blob += np.ascontiguousarray(biases, dtype="<f4").tobytes()
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def write_actv(path, layer_id: int, image_ids, data: np.ndarray) -> None:
    n, d = data.shape
    blob = ACTV_MAGIC + struct.pack("<4I", 1, layer_id, n, d)
    blob += struct.pack("<B", POOLING_SPATIAL_MEAN)
    for image_id in image_ids:
        raw = str(image_id).encode("utf-8")
        blob += struct.pack("<H", len(raw)) + raw
    blob += np.ascontiguousarray(data, dtype="<f4").tobytes()
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def _load_alexnet():
    from torchvision.models import AlexNet_Weights, alexnet

    try:
        return alexnet(weights=AlexNet_Weights.IMAGENET1K_V1)
    except Exception as exc:  # download/cache failures land here
        raise ModelUnavailable(f"cannot load pretrained AlexNet: {exc}") from exc


def _load_vgg19():
    from torchvision.models import VGG19_Weights, vgg19

    try:
        return vgg19(weights=VGG19_Weights.IMAGENET1K_V1)
    except Exception as exc:
        raise ModelUnavailable(f"cannot load pretrained VGG19: {exc}") from exc


def export_filter_bank(out_path, model=None) -> dict:
    """Write the first conv layer of an AlexNet-style model as FILB.

    Note: torchvision's pretrained AlexNet is the single-GPU variant with 64
    first-layer filters (11x11, stride 4); the file format carries the count
    in its header, so consumers do not assume a specific number.
    """
    net = _load_alexnet() if model is None else model
    conv1 = None
    for layer in net.features:
        if isinstance(layer, torch.nn.Conv2d):
            conv1 = layer
            break
    if conv1 is None:
        raise ModelUnavailable("model has no convolution layer")
    weights = conv1.weight.detach().cpu().numpy()
    biases = conv1.bias.detach().cpu().numpy()
    if weights.ndim != 4 or weights.shape[1] != 3:
        raise ModelUnavailable(f"unexpected conv1 shape {weights.shape}")
    if not np.isfinite(weights).all() or not np.isfinite(biases).all():
        raise ModelUnavailable("conv1 weights contain non-finite values")
    stride = conv1.stride[0] if isinstance(conv1.stride, tuple) else conv1.stride
    write_filb(out_path, weights, biases, int(stride))
    return {
        "num_filters": weights.shape[0],
        "kernel": (weights.shape[2], weights.shape[3]),
        "stride": int(stride),
        "path": Path(out_path),
    }


def read_manifest_rows(manifest_path) -> list:
    """(image_id, absolute path) pairs in file order from a manifest CSV."""
    manifest_path = Path(manifest_path)
    rows = []
    with open(manifest_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("# "))
        header = next(reader, None)
        if not header or header[:2] != ["image_id", "image_path"]:
            raise ExportError(
                f"{manifest_path}: header must start with image_id,image_path"
            )
        for rec in reader:
            if not rec:
                continue
            path = Path(rec[1])
            if not path.is_absolute():
                path = manifest_path.parent / path
            rows.append((rec[0], path))
    if not rows:
        raise ExportError(f"{manifest_path}: no rows")
    return rows


def _preprocess(path, size, mean, std) -> torch.Tensor:
    with Image.open(path) as im:
        rgb = im.convert("RGB").resize((size, size), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.asarray(mean, dtype=np.float32)) / np.asarray(std, dtype=np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1))


def vgg_conv_relu_indices(features) -> list:
    """Index of the ReLU following each conv in a VGG-style feature stack."""
    out = []
    layers = list(features)
    for i, layer in enumerate(layers):
        if isinstance(layer, torch.nn.Conv2d):
            if i + 1 >= len(layers) or not isinstance(layers[i + 1], torch.nn.ReLU):
                raise ModelUnavailable(f"conv at index {i} is not followed by ReLU")
            out.append(i + 1)
    return out


def export_activations(job: ExportJob, model=None, batch_size: int = 8) -> dict:
    """Forward every manifest image and write one ACTV file per layer.

    Each requested convolutional layer contributes its post-ReLU response,
    spatially mean-pooled per channel, so a layer's vector length equals its
    channel count. Files are named ``layer_NN.actv``. Per-image read failures
    are skipped up to a 5 percent budget.
    """
    net = _load_vgg19() if model is None else model
    net.eval()
    relu_idx = vgg_conv_relu_indices(net.features)
    requested = sorted(job.layers)
    if max(requested) > len(relu_idx):
        raise ModelUnavailable(
            f"model has {len(relu_idx)} conv layers, job wants {max(requested)}"
        )
    deepest = relu_idx[max(requested) - 1]
    stack = torch.nn.Sequential(*list(net.features)[: deepest + 1])
    capture = {relu_idx[k - 1]: k for k in requested}

    rows = read_manifest_rows(job.manifest_path)
    kept_ids = []
    pooled = {k: [] for k in requested}
    failures = {}

    batch_ids, batch_tensors = [], []

    def flush():
        if not batch_tensors:
            return
        x = torch.stack(batch_tensors)
        with torch.no_grad():
            for i, layer in enumerate(stack):
                x = layer(x)
                layer_id = capture.get(i)
                if layer_id is not None:
                    pooled[layer_id].append(
                        x.mean(dim=(2, 3)).cpu().numpy().astype(np.float32)
                    )
        kept_ids.extend(batch_ids)
        batch_ids.clear()
        batch_tensors.clear()

    for image_id, path in rows:
        try:
            tensor = _preprocess(path, job.size, job.mean, job.std)
        except (OSError, UnidentifiedImageError) as exc:
            log.warning("skipping %s: %s", image_id, exc)
            failures[image_id] = str(exc)
            continue
        batch_ids.append(image_id)
        batch_tensors.append(tensor)
        if len(batch_tensors) >= batch_size:
            flush()
    flush()

    if len(failures) > DROP_BUDGET * len(rows):
        raise ExportError(
            f"{len(failures)}/{len(rows)} images failed (budget {DROP_BUDGET:.0%})"
        )
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for layer_id in requested:
        data = np.concatenate(pooled[layer_id], axis=0)
        path = out_dir / f"layer_{layer_id:02d}.actv"
        write_actv(path, layer_id, kept_ids, data)
        written[layer_id] = path
    return {"files": written, "n_images": len(kept_ids), "failures": failures}
