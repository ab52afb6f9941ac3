"""Minimal SGD training for desk-scale dense fixtures."""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .errors import TrainingError
from .network import ACTIVATIONS, Activation, Dense, Network, build_mlp


def train_sgd(dataset: Dataset, architecture: str, epochs: int, learning_rate: float,
              seed: int, activation: str = "relu", batch_size: int = 32,
              test_fraction: float = 0.2) -> tuple[Network, dict]:
    """Train a dense MLP with softmax cross-entropy; deterministic per seed.

    Returns the network plus a stats dict with final train/test accuracy.
    Convolutional fixtures are produced elsewhere (random weights or the
    exporter package); this trainer handles dense architectures only.
    """
    if len(dataset) == 0:
        raise TrainingError("dataset is empty")
    rng = np.random.default_rng(seed)
    net = build_mlp(dataset.inputs.shape[1], architecture, activation, rng)
    label_count = net.label_count

    n = len(dataset)
    perm = rng.permutation(n)
    n_test = max(1, int(n * test_fraction))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    xtr, ytr = dataset.inputs[train_idx], dataset.labels[train_idx]
    xte, yte = dataset.inputs[test_idx], dataset.labels[test_idx]

    weights = [l.weights.copy() for l in net.layers if isinstance(l, Dense)]
    biases = [l.bias.copy() for l in net.layers if isinstance(l, Dense)]
    act_fn, act_deriv = ACTIVATIONS[activation]

    for _ in range(epochs):
        order = rng.permutation(len(xtr))
        for start in range(0, len(xtr), batch_size):
            idx = order[start:start + batch_size]
            xb, yb = xtr[idx], ytr[idx]
            # forward, caching pre-activation inputs per dense layer
            acts = [xb]
            for li in range(len(weights)):
                z = acts[-1] @ weights[li].T + biases[li]
                acts.append(act_fn(z) if li < len(weights) - 1 else z)
            scores = acts[-1]
            shifted = scores - scores.max(axis=1, keepdims=True)
            exps = np.exp(shifted)
            probs = exps / exps.sum(axis=1, keepdims=True)
            loss = -np.mean(np.log(probs[np.arange(len(yb)), yb] + 1e-300))
            if not np.isfinite(loss):
                raise TrainingError("training diverged (non-finite loss)")
            g = probs
            g[np.arange(len(yb)), yb] -= 1.0
            g /= len(yb)
            for li in reversed(range(len(weights))):
                gw = g.T @ acts[li]
                gb = g.sum(axis=0)
                if li > 0:
                    # acts[li] is post-activation; recover derivative from it for relu,
                    # otherwise recompute the pre-activation.
                    z = acts[li - 1] @ weights[li - 1].T + biases[li - 1] if activation != "relu" else None
                    g = g @ weights[li]
                    g *= (acts[li] > 0).astype(float) if activation == "relu" else act_deriv(z)
                weights[li] -= learning_rate * gw
                biases[li] -= learning_rate * gb

    layers = []
    di = 0
    for layer in net.layers:
        if isinstance(layer, Dense):
            layers.append(Dense(weights[di], biases[di]))
            di += 1
        else:
            layers.append(Activation(layer.function))
    trained = Network(net.input_shape, layers, label_count)

    stats = {
        "train_accuracy": accuracy(trained, xtr, ytr),
        "test_accuracy": accuracy(trained, xte, yte),
        "train_size": len(xtr),
        "test_size": len(xte),
    }
    return trained, stats


def accuracy(net: Network, xs: np.ndarray, ys: np.ndarray) -> float:
    if len(xs) == 0:
        return 0.0
    pred = np.argmax(net.forward_batch(xs), axis=1)
    return float(np.mean(pred == ys))
