#!/usr/bin/env python3
# Copyright 2026 The sss Authors.
# SPDX-License-Identifier: Apache-2.0
"""Builds the desk-scale MNIST-format subset shipped under data/mnist-subset.

The source images are the 1797 handwritten digits bundled with scikit-learn
(8x8, 16 grey levels). Each digit is upsampled to 20x20 and placed on a 28x28
canvas at a random offset, mirroring the MNIST framing. Training samples come
from the first 1500 source digits and test samples from the remaining 297, so
the two splits never share a source scan.
"""
import argparse
import os
import struct

import numpy as np
from scipy import ndimage
from sklearn.datasets import load_digits


def render(img8, dx, dy):
    up = ndimage.zoom(img8.astype(np.float64) / 16.0, 2.5, order=1)
    up = np.clip(up, 0.0, 1.0)
    canvas = np.zeros((28, 28))
    y0, x0 = 4 + dy, 4 + dx
    canvas[y0:y0 + 20, x0:x0 + 20] = up
    return np.round(canvas * 255.0).astype(np.uint8)


def build(images, labels, count, rng):
    idx = rng.integers(0, len(images), size=count)
    shifts = rng.integers(-3, 4, size=(count, 2))
    out = np.stack([render(images[i], dx, dy) for i, (dx, dy) in zip(idx, shifts)])
    return out, labels[idx].astype(np.uint8)


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, images.shape[0], 28, 28))
        f.write(images.tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        f.write(labels.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "mnist-subset"))
    ap.add_argument("--train", type=int, default=5000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20171016)
    args = ap.parse_args()

    digits = load_digits()
    images = digits.images.reshape(-1, 8, 8)
    labels = digits.target
    rng = np.random.default_rng(args.seed)
    tr_x, tr_y = build(images[:1500], labels[:1500], args.train, rng)
    te_x, te_y = build(images[1500:], labels[1500:], args.test, rng)

    os.makedirs(args.out, exist_ok=True)
    write_idx_images(os.path.join(args.out, "train-images-idx3-ubyte"), tr_x)
    write_idx_labels(os.path.join(args.out, "train-labels-idx1-ubyte"), tr_y)
    write_idx_images(os.path.join(args.out, "t10k-images-idx3-ubyte"), te_x)
    write_idx_labels(os.path.join(args.out, "t10k-labels-idx1-ubyte"), te_y)


if __name__ == "__main__":
    main()
