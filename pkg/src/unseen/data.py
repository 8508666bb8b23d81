"""Dataset ingestion, synthetic blobs, normalization, batch iteration.

Datasets are immutable once built: normalization returns a new one.
All features are float64 row-major matrices, labels (when present) are
integer vectors re-indexed to 0..k-1.
"""

import csv
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: Optional[np.ndarray]
    name: str = ""

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class BlobSpec:
    n_samples: int
    n_features: int
    k: int
    std: float
    seed: int = 0


def make_blobs(spec):
    """Isotropic Gaussian blobs around k seeded uniform centers in [-10, 10]^d.

    Cluster sizes are as equal as possible: N mod k clusters get one
    extra sample. Labels are the generating center index, grouped.
    """
    if spec.k > spec.n_samples:
        raise ValueError(f"k={spec.k} exceeds n_samples={spec.n_samples}")
    if spec.k < 1 or spec.n_features < 1:
        raise ValueError("k and n_features must be positive")
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(-10.0, 10.0, size=(spec.k, spec.n_features))
    base, extra = divmod(spec.n_samples, spec.k)
    sizes = [base + 1] * extra + [base] * (spec.k - extra)
    labels = np.repeat(np.arange(spec.k), sizes)
    noise = rng.standard_normal((spec.n_samples, spec.n_features))
    features = centers[labels] + spec.std * noise
    name = f"blobs(k={spec.k},n={spec.n_samples},d={spec.n_features},std={spec.std:g})"
    return Dataset(features=features, labels=labels, name=name)


def _is_numeric_row(cells):
    try:
        for c in cells:
            float(c)
    except ValueError:
        return False
    return True


def _reindex_labels(raw):
    """Map raw label tokens to 0..k-1 in order of first appearance."""
    mapping = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, token in enumerate(raw):
        if token not in mapping:
            mapping[token] = len(mapping)
        out[i] = mapping[token]
    return out


def load_csv(path, label_col=None):
    """Rectangular numeric CSV, optional header (auto-detected), optional label column."""
    with open(path, newline="") as fh:
        rows = [(lineno, [c.strip() for c in cells])
                for lineno, cells in enumerate(csv.reader(fh), start=1)
                if cells]
    if rows and not _is_numeric_row(rows[0][1]):
        rows = rows[1:]  # header
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0][1])
    for lineno, cells in rows:
        if len(cells) != width:
            raise ValueError(f"{path}: ragged row at line {lineno}: {len(cells)} fields, expected {width}")
    col = None
    if label_col is not None:
        col = int(label_col)
        if col < 0:
            col += width
        if not 0 <= col < width:
            raise ValueError(f"{path}: label column {label_col} out of range for {width} columns")
    raw_labels = []
    features = np.empty((len(rows), width - (col is not None)), dtype=np.float64)
    for r, (lineno, cells) in enumerate(rows):
        if col is not None:
            raw_labels.append(cells[col])
            cells = cells[:col] + cells[col + 1:]
        for j, cell in enumerate(cells):
            try:
                features[r, j] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: non-numeric value {cell!r} at line {lineno}") from None
    labels = _reindex_labels(raw_labels) if col is not None else None
    return Dataset(features=features, labels=labels, name=str(path))


_IDX_IMAGES = 2051
_IDX_LABELS = 2049


def _read_exact(fh, nbytes, path, what):
    buf = fh.read(nbytes)
    if len(buf) != nbytes:
        raise ValueError(f"{path}: truncated {what} ({len(buf)} of {nbytes} bytes)")
    return buf


def load_idx(images_path, labels_path):
    """MNIST-style big-endian IDX pair: images (magic 2051), labels (magic 2049)."""
    with open(images_path, "rb") as fh:
        magic, n, h, w = struct.unpack(">IIII", _read_exact(fh, 16, images_path, "header"))
        if magic != _IDX_IMAGES:
            raise ValueError(f"{images_path}: bad magic {magic}, expected {_IDX_IMAGES}")
        pixels = _read_exact(fh, n * h * w, images_path, "pixel payload")
    images = np.frombuffer(pixels, dtype=np.uint8).reshape(n, h * w).astype(np.float64)
    with open(labels_path, "rb") as fh:
        magic, n_lab = struct.unpack(">II", _read_exact(fh, 8, labels_path, "header"))
        if magic != _IDX_LABELS:
            raise ValueError(f"{labels_path}: bad magic {magic}, expected {_IDX_LABELS}")
        raw = _read_exact(fh, n_lab, labels_path, "label payload")
    if n_lab != n:
        raise ValueError(f"label count {n_lab} != image count {n}")
    labels = _reindex_labels(np.frombuffer(raw, dtype=np.uint8).tolist())
    return Dataset(features=images, labels=labels, name=str(images_path))


def z_normalize(ds, mode="feature_wise"):
    """Zero mean, unit population std; constant directions map to zero.

    feature_wise scales each column on its own; channel_wise uses one
    global mean/std over every entry (flattened single-channel images).
    """
    x = ds.features
    if mode == "feature_wise":
        mu = x.mean(axis=0)
        sd = x.std(axis=0)
        out = np.where(sd > 0.0, (x - mu) / np.where(sd > 0.0, sd, 1.0), 0.0)
    elif mode == "channel_wise":
        sd = x.std()
        out = (x - x.mean()) / sd if sd > 0.0 else np.zeros_like(x)
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    return Dataset(features=out, labels=ds.labels, name=ds.name)


def batches(ds, batch_size, seed, epoch):
    """Seeded shuffled index batches, fresh permutation per (seed, epoch).

    A trailing singleton is merged into the previous batch so every
    batch has at least two rows (pairwise terms need a neighbor).
    Accepts a Dataset or a plain sample count.
    """
    n = ds if isinstance(ds, int) else ds.n
    if batch_size < 2:
        raise ValueError(f"batch_size must be >= 2, got {batch_size}")
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    out = [perm[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(out) > 1 and len(out[-1]) == 1:
        out[-2] = np.concatenate([out[-2], out[-1]])
        out.pop()
    return out
