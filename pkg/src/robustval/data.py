"""Dataset ingestion (csv / idx) and synthetic fixture generation."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class Dataset:
    """Samples with pixel values in [0,1] and integer class labels."""

    inputs: np.ndarray  # (n, m) float64 in [0,1]
    labels: np.ndarray  # (n,) int

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels.shape != (self.inputs.shape[0],):
            raise DataError("inputs must be (n, m), labels (n,)")
        if self.inputs.size and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0):
            raise DataError("input values must lie in [0,1]")

    def __len__(self) -> int:
        return self.inputs.shape[0]


def load_csv(path) -> Dataset:
    """One sample per line: `label,v0,...,v{m-1}`.

    Raw values may be in [0,255] or already in [0,1]; scaling is
    auto-detected from the maximum value.
    """
    labels, rows = [], []
    with open(path) as fh:
        for ln, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                labels.append(int(parts[0]))
                rows.append([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{ln + 1}: {exc}") from exc
    if not rows:
        return Dataset(np.zeros((0, 0)), np.zeros(0, dtype=int))
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: inconsistent sample widths {sorted(widths)}")
    x = np.array(rows, dtype=np.float64)
    if x.size and x.max() > 1.0:
        x = x / 255.0
    return Dataset(x, np.array(labels, dtype=int))


def load_idx_images(path) -> np.ndarray:
    """Standard big-endian idx3 image file -> (n, rows*cols) floats in [0,1]."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise DataError(f"{path}: truncated idx header")
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != 0x00000803:
        raise DataError(f"{path}: bad idx3 magic 0x{magic:08x}")
    expected = 16 + n * rows * cols
    if len(raw) < expected:
        raise DataError(f"{path}: truncated idx file ({len(raw)} < {expected} bytes)")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16, count=n * rows * cols)
    return pixels.reshape(n, rows * cols).astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    """Standard big-endian idx1 label file -> (n,) ints."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise DataError(f"{path}: truncated idx header")
    magic, n = struct.unpack(">II", raw[:8])
    if magic != 0x00000801:
        raise DataError(f"{path}: bad idx1 magic 0x{magic:08x}")
    if len(raw) < 8 + n:
        raise DataError(f"{path}: truncated idx file")
    return np.frombuffer(raw, dtype=np.uint8, offset=8, count=n).astype(int)


def load_dataset(path, format: str = "csv", labels_path=None) -> Dataset:
    """Load a dataset from csv or an idx image/label file pair.

    For idx, `path` is the image file; when `labels_path` is omitted the
    labels default to zero (useful for unlabelled probe batches).
    """
    if format == "csv":
        return load_csv(path)
    if format == "idx":
        x = load_idx_images(path)
        if labels_path is None:
            y = np.zeros(x.shape[0], dtype=int)
        else:
            y = load_idx_labels(labels_path)
            if y.shape[0] != x.shape[0]:
                raise DataError(f"{path}: {x.shape[0]} images but {y.shape[0]} labels")
        return Dataset(x, y)
    raise DataError(f"unknown dataset format {format!r}")


def save_csv(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        for x, y in zip(dataset.inputs, dataset.labels):
            fh.write(str(int(y)) + "," + ",".join(repr(float(v)) for v in x) + "\n")


def gen_synthetic(classes: int, dims: int, per_class: int, spread: float, seed: int) -> Dataset:
    """Gaussian clusters around random centers in [0.2, 0.8]^dims, clipped to [0,1]."""
    if classes < 2 or dims < 2 or spread <= 0:
        raise DataError("need classes >= 2, dims >= 2, spread > 0")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.2, 0.8, (classes, dims))
    xs, ys = [], []
    for k in range(classes):
        xs.append(np.clip(centers[k] + rng.normal(0.0, spread, (per_class, dims)), 0.0, 1.0))
        ys.append(np.full(per_class, k, dtype=int))
    return Dataset(np.vstack(xs), np.concatenate(ys))
