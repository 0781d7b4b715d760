#!/usr/bin/env python3
"""Regenerate the miniature binary fixtures checked into tests/fixtures/.

Writes a small random filter bank (8 filters, 3x11x11, stride 4) and three
activation files (12 images, 16/32/48 channels) with plain struct packing,
independent of the package readers, so round-trip tests are meaningful.
"""

import struct
import sys
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def write_filb(path, weights, biases, stride):
    nf, ch, kh, kw = weights.shape
    blob = b"FILB"
    blob += struct.pack("<6I", 1, nf, ch, kh, kw, stride)
    blob += weights.astype("<f4").tobytes()
    blob += biases.astype("<f4").tobytes()
    path.write_bytes(blob)


def write_actv(path, layer_id, image_ids, data):
    n, d = data.shape
    blob = b"ACTV"
    blob += struct.pack("<4I", 1, layer_id, n, d)
    blob += struct.pack("<B", 1)  # spatial-mean pooling tag
    for image_id in image_ids:
        raw = image_id.encode("utf-8")
        blob += struct.pack("<H", len(raw)) + raw
    blob += data.astype("<f4").tobytes()
    path.write_bytes(blob)


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240101)
    weights = rng.standard_normal((8, 3, 11, 11)).astype(np.float32) * 0.05
    biases = rng.standard_normal(8).astype(np.float32) * 0.01
    write_filb(FIXTURES / "mini.filb", weights, biases, stride=4)

    image_ids = [f"img_{i:04d}" for i in range(12)]
    for layer_id, d in ((1, 16), (2, 32), (3, 48)):
        data = rng.standard_normal((12, d)).astype(np.float32)
        write_actv(FIXTURES / f"layer_{layer_id:02d}.actv", layer_id, image_ids, data)
    print(f"fixtures written to {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
