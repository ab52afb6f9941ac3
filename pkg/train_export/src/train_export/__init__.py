"""Train digit classifiers and export them to the robustval weight format."""

from .data import DigitData, load_digit_data, load_digits_fallback, load_mnist
from .export import (
    ExportManifest,
    build_cnn,
    build_fnn,
    parity_deviation,
    to_network,
    train_and_export,
)

__version__ = "0.1.0"

__all__ = [
    "DigitData",
    "ExportManifest",
    "build_cnn",
    "build_fnn",
    "load_digit_data",
    "load_digits_fallback",
    "load_mnist",
    "parity_deviation",
    "to_network",
    "train_and_export",
    "__version__",
]
