"""Command line entry point for training and exporting digit classifiers."""

import argparse
import json
from dataclasses import asdict

from .export import train_and_export


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="train-export",
        description="Train a digit classifier and export it to the robustval "
                    "weight format.")
    parser.add_argument("--architecture", default="3x30,10",
                        help='dense structure string like "3x30,10", or "cnn"')
    parser.add_argument("--activation", default="relu",
                        choices=["relu", "sigmoid", "tanh"])
    parser.add_argument("--epochs", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="export")
    parser.add_argument("--data-dir", default=None,
                        help="directory holding the four MNIST idx files; "
                             "omit to train on the bundled 8x8 digits")
    args = parser.parse_args(argv)
    manifest = train_and_export(args.architecture, args.activation,
                                args.epochs, args.seed, args.out,
                                data_dir=args.data_dir)
    print(json.dumps(asdict(manifest), indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
