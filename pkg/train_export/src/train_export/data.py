"""Digit datasets for training: local MNIST idx files when present,
otherwise the bundled scikit-learn 8x8 digits as an offline stand-in."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from robustval.data import load_idx_images, load_idx_labels

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass(frozen=True)
class DigitData:
    """Flattened images in [0, 1] plus integer labels, already split."""

    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    side: int  # images are side x side, single channel
    source: str

    @property
    def input_dim(self) -> int:
        return self.side * self.side


def load_mnist(data_dir: str) -> DigitData:
    """Read the four standard idx files from a local directory."""
    paths = {k: os.path.join(data_dir, v) for k, v in MNIST_FILES.items()}
    missing = [p for p in paths.values() if not os.path.exists(p)]
    if missing:
        raise FileNotFoundError(f"missing MNIST idx files: {missing}")
    train_x = load_idx_images(paths["train_images"])
    train_y = load_idx_labels(paths["train_labels"])
    test_x = load_idx_images(paths["test_images"])
    test_y = load_idx_labels(paths["test_labels"])
    side = int(round(np.sqrt(train_x.shape[1])))
    return DigitData(train_x, train_y, test_x, test_y, side, "mnist")


def load_digits_fallback(seed: int = 0) -> DigitData:
    """scikit-learn's 8x8 handwritten digits, 80/20 split, scaled to [0, 1]."""
    from sklearn.datasets import load_digits
    from sklearn.model_selection import train_test_split

    bunch = load_digits()
    x = (bunch.data / 16.0).astype(np.float64)
    y = bunch.target.astype(np.int64)
    train_x, test_x, train_y, test_y = train_test_split(
        x, y, test_size=0.2, random_state=seed, stratify=y)
    return DigitData(train_x, train_y, test_x, test_y, 8, "sklearn-digits")


def load_digit_data(data_dir: str | None = None, seed: int = 0) -> DigitData:
    """MNIST if a directory with the idx files is supplied, else the fallback."""
    if data_dir is not None:
        return load_mnist(data_dir)
    return load_digits_fallback(seed)
