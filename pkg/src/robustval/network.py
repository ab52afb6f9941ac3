"""Network representation, inference and input gradients.

Layers operate on flat float64 vectors; convolutional layers interpret
them in row-major (height, width, channel) order. All arithmetic is
64-bit. Networks are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ShapeError

WEIGHT_FORMAT_VERSION = 1

# Chunk size (columns) for im2col matmuls; bounds peak memory when a
# zonotope with thousands of generators passes through a convolution.
_CONV_CHUNK = 256


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


ACTIVATIONS = {
    "relu": (relu, lambda x: (x > 0).astype(np.float64)),
    "sigmoid": (sigmoid, lambda x: sigmoid(x) * (1.0 - sigmoid(x))),
    "tanh": (np.tanh, lambda x: 1.0 - np.tanh(x) ** 2),
}


@dataclass(frozen=True)
class Dense:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    kind: str = field(default="dense", init=False)


@dataclass(frozen=True)
class Conv2D:
    filters: np.ndarray  # (kh, kw, in_channels, out_channels)
    bias: np.ndarray  # (out_channels,)
    stride: int = 1
    padding: int = 0
    kind: str = field(default="conv2d", init=False)


@dataclass(frozen=True)
class MaxPool2D:
    window: tuple[int, int]
    kind: str = field(default="maxpool2d", init=False)


@dataclass(frozen=True)
class Activation:
    function: str  # relu | sigmoid | tanh
    kind: str = field(default="activation", init=False)

    def __post_init__(self):
        if self.function not in ACTIVATIONS:
            raise FormatError(f"unknown activation {self.function!r}")


class ConvPlan:
    """Precomputed im2col indices for one Conv2D layer at a fixed input shape."""

    def __init__(self, layer: Conv2D, in_shape: tuple[int, int, int]):
        h, w, c = in_shape
        kh, kw, cin, f = layer.filters.shape
        if cin != c:
            raise ShapeError(f"conv expects {cin} channels, input has {c}")
        p, s = layer.padding, layer.stride
        hp, wp = h + 2 * p, w + 2 * p
        if hp < kh or wp < kw:
            raise ShapeError("conv kernel larger than (padded) input")
        oh = (hp - kh) // s + 1
        ow = (wp - kw) // s + 1
        rows = (np.arange(oh) * s)[:, None, None, None, None] + np.arange(kh)[None, None, :, None, None]
        cols = (np.arange(ow) * s)[None, :, None, None, None] + np.arange(kw)[None, None, None, :, None]
        ch = np.arange(c)[None, None, None, None, :]
        idx = (rows * wp + cols) * c + ch  # (oh, ow, kh, kw, c)
        self.idx = idx.reshape(oh * ow, kh * kw * c)
        self.in_shape = (h, w, c)
        self.out_shape = (oh, ow, f)
        self.padding = p
        self.filter_mat = np.ascontiguousarray(layer.filters.reshape(kh * kw * c, f))
        self.bias = layer.bias

    def _padded(self, cols: np.ndarray) -> np.ndarray:
        h, w, c = self.in_shape
        p = self.padding
        if p == 0:
            return cols
        k = cols.shape[0]
        padded = np.zeros((k, h + 2 * p, w + 2 * p, c))
        padded[:, p:p + h, p:p + w, :] = cols.reshape(k, h, w, c)
        return padded.reshape(k, -1)

    def apply_cols(self, cols: np.ndarray, filter_mat: np.ndarray | None = None) -> np.ndarray:
        """Apply the convolution (no bias) to each row of `cols`."""
        fm = self.filter_mat if filter_mat is None else filter_mat
        flat = self._padded(np.atleast_2d(cols))
        k = flat.shape[0]
        out = np.empty((k, self.idx.shape[0], fm.shape[1]))
        for i in range(0, k, _CONV_CHUNK):
            out[i:i + _CONV_CHUNK] = flat[i:i + _CONV_CHUNK][:, self.idx] @ fm
        return out.reshape(k, -1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        h, w, c = self.in_shape
        p = self.padding
        oh, ow, f = self.out_shape
        gp = grad_out.reshape(oh * ow, f) @ self.filter_mat.T
        flat = np.zeros((h + 2 * p) * (w + 2 * p) * c)
        np.add.at(flat, self.idx, gp)
        if p == 0:
            return flat
        return flat.reshape(h + 2 * p, w + 2 * p, c)[p:p + h, p:p + w, :].ravel()


class PoolPlan:
    """Index map from flat input positions to pool groups, output in (h, w, c) order."""

    def __init__(self, layer: MaxPool2D, in_shape: tuple[int, int, int]):
        h, w, c = in_shape
        wh, ww = layer.window
        if h % wh or w % ww:
            raise ShapeError(f"pool window {layer.window} does not divide spatial dims {(h, w)}")
        oh, ow = h // wh, w // ww
        ids = np.arange(h * w * c).reshape(oh, wh, ow, ww, c)
        self.idx = ids.transpose(0, 2, 4, 1, 3).reshape(oh * ow * c, wh * ww)
        self.in_shape = in_shape
        self.out_shape = (oh, ow, c)


Layer = Dense | Conv2D | MaxPool2D | Activation


class Network:
    """Layered feedforward/convolutional classifier over [0,1]^m inputs."""

    def __init__(self, input_shape, layers: list[Layer], label_count: int):
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layers = list(layers)
        self.label_count = int(label_count)
        self.plans: list[object] = []
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            try:
                shape = self._plan_layer(layer, shape)
            except ShapeError as exc:
                raise FormatError(f"layer {i}: {exc}") from exc
        if math.prod(shape) != self.label_count:
            raise FormatError(
                f"final layer produces {math.prod(shape)} scores, expected {self.label_count}"
            )
        self.output_shape = shape

    def _plan_layer(self, layer: Layer, shape):
        if isinstance(layer, Dense):
            out, inp = layer.weights.shape
            if math.prod(shape) != inp:
                raise ShapeError(f"dense expects {inp} inputs, got shape {shape}")
            if layer.bias.shape != (out,):
                raise ShapeError("dense bias length mismatch")
            self.plans.append(None)
            return (out,)
        if isinstance(layer, Conv2D):
            if len(shape) != 3:
                raise ShapeError(f"conv needs (h, w, c) input, got {shape}")
            plan = ConvPlan(layer, shape)
            self.plans.append(plan)
            return plan.out_shape
        if isinstance(layer, MaxPool2D):
            if len(shape) != 3:
                raise ShapeError(f"pool needs (h, w, c) input, got {shape}")
            plan = PoolPlan(layer, shape)
            self.plans.append(plan)
            return plan.out_shape
        if isinstance(layer, Activation):
            self.plans.append(None)
            return shape
        raise ShapeError(f"unknown layer type {type(layer).__name__}")

    @property
    def input_dim(self) -> int:
        return math.prod(self.input_shape)

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.input_dim:
            raise ShapeError(f"input has {x.size} values, network expects {self.input_dim}")
        if not np.all(np.isfinite(x)):
            raise ShapeError("input contains non-finite values")
        return x

    def _apply_layer(self, i: int, x: np.ndarray) -> np.ndarray:
        layer, plan = self.layers[i], self.plans[i]
        if isinstance(layer, Dense):
            return layer.weights @ x + layer.bias
        if isinstance(layer, Conv2D):
            oh, ow, f = plan.out_shape
            return plan.apply_cols(x[None, :])[0] + np.tile(layer.bias, oh * ow)
        if isinstance(layer, MaxPool2D):
            return x[plan.idx].max(axis=1)
        return ACTIVATIONS[layer.function][0](x)

    def forward(self, x) -> tuple[np.ndarray, int]:
        """Return (scores, argmax label); ties break to the lowest index."""
        x = self._check_input(x)
        for i in range(len(self.layers)):
            x = self._apply_layer(i, x)
        return x, int(np.argmax(x))

    def forward_batch(self, xs: np.ndarray) -> np.ndarray:
        """Scores for a batch of flat inputs, shape (n, input_dim) -> (n, label_count)."""
        xs = np.asarray(xs, dtype=np.float64)
        for i, (layer, plan) in enumerate(zip(self.layers, self.plans)):
            if isinstance(layer, Dense):
                xs = xs @ layer.weights.T + layer.bias
            elif isinstance(layer, Conv2D):
                oh, ow, f = plan.out_shape
                xs = plan.apply_cols(xs) + np.tile(layer.bias, oh * ow)
            elif isinstance(layer, MaxPool2D):
                xs = xs[:, plan.idx].max(axis=2)
            else:
                xs = ACTIVATIONS[layer.function][0](xs)
        return xs

    def input_gradient(self, x, target: int) -> np.ndarray:
        """Gradient of softmax cross-entropy loss at `target` w.r.t. the input."""
        x = self._check_input(x)
        cache = [x]
        for i in range(len(self.layers)):
            cache.append(self._apply_layer(i, cache[-1]))
        scores = cache[-1]
        exps = np.exp(scores - scores.max())
        g = exps / exps.sum()
        g[target] -= 1.0
        for i in reversed(range(len(self.layers))):
            layer, plan, inp = self.layers[i], self.plans[i], cache[i]
            if isinstance(layer, Dense):
                g = layer.weights.T @ g
            elif isinstance(layer, Conv2D):
                g = plan.backward(g)
            elif isinstance(layer, MaxPool2D):
                vals = inp[plan.idx]
                winners = plan.idx[np.arange(plan.idx.shape[0]), np.argmax(vals, axis=1)]
                gi = np.zeros(inp.size)
                np.add.at(gi, winners, g)
                g = gi
            else:
                g = g * ACTIVATIONS[layer.function][1](inp)
        return g


def mlp_structure(spec: str) -> tuple[list[int], int]:
    """Parse a dense structure string like "3x30,10" into (hidden sizes, output size).

    Accepts both "x" and the typographic multiplication sign in repeat tokens.
    """
    sizes: list[int] = []
    for token in spec.replace("×", "x").split(","):
        token = token.strip()
        if "x" in token:
            count, width = token.split("x")
            sizes.extend([int(width)] * int(count))
        else:
            sizes.append(int(token))
    if len(sizes) < 1:
        raise FormatError(f"empty structure string {spec!r}")
    return sizes[:-1], sizes[-1]


def logical_layer_count(spec: str) -> int:
    """Number of layers in the conventional count: input + hidden + output."""
    hidden, _ = mlp_structure(spec)
    return len(hidden) + 2


def build_mlp(input_dim: int, structure: str, activation: str = "relu",
              rng: np.random.Generator | None = None) -> Network:
    """Fully connected network from a structure string, He-initialized when rng given."""
    hidden, out = mlp_structure(structure)
    rng = rng or np.random.default_rng(0)
    layers: list[Layer] = []
    prev = input_dim
    for width in hidden:
        scale = math.sqrt(2.0 / prev)
        layers.append(Dense(rng.normal(0.0, scale, (width, prev)), np.zeros(width)))
        layers.append(Activation(activation))
        prev = width
    layers.append(Dense(rng.normal(0.0, math.sqrt(2.0 / prev), (out, prev)), np.zeros(out)))
    return Network((input_dim,), layers, out)


def save_network(net: Network, path) -> None:
    """Write the self-describing text weight format (see docs in README)."""
    layers = []
    for layer in net.layers:
        if isinstance(layer, Dense):
            layers.append({
                "kind": "dense",
                "shape": list(layer.weights.shape),
                "weights": layer.weights.ravel().tolist(),
                "bias": layer.bias.tolist(),
            })
        elif isinstance(layer, Conv2D):
            layers.append({
                "kind": "conv2d",
                "filter_shape": list(layer.filters.shape),
                "filters": layer.filters.ravel().tolist(),
                "bias": layer.bias.tolist(),
                "stride": layer.stride,
                "padding": layer.padding,
            })
        elif isinstance(layer, MaxPool2D):
            layers.append({"kind": "maxpool2d", "window": list(layer.window)})
        else:
            layers.append({"kind": "activation", "function": layer.function})
    doc = {
        "format_version": WEIGHT_FORMAT_VERSION,
        "input_shape": list(net.input_shape),
        "label_count": net.label_count,
        "layers": layers,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_network(path) -> Network:
    """Load a network from the text weight format; rejects unknown versions."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse network file {path}: {exc}") from exc
    if doc.get("format_version") != WEIGHT_FORMAT_VERSION:
        raise FormatError(f"unknown weight format version {doc.get('format_version')!r}")
    layers: list[Layer] = []
    for i, rec in enumerate(doc.get("layers", [])):
        try:
            kind = rec["kind"]
            if kind == "dense":
                out, inp = rec["shape"]
                w = np.array(rec["weights"], dtype=np.float64).reshape(out, inp)
                layers.append(Dense(w, np.array(rec["bias"], dtype=np.float64)))
            elif kind == "conv2d":
                fs = rec["filter_shape"]
                f = np.array(rec["filters"], dtype=np.float64).reshape(fs)
                layers.append(Conv2D(f, np.array(rec["bias"], dtype=np.float64),
                                     stride=int(rec.get("stride", 1)),
                                     padding=int(rec.get("padding", 0))))
            elif kind == "maxpool2d":
                layers.append(MaxPool2D(tuple(rec["window"])))
            elif kind == "activation":
                layers.append(Activation(rec["function"]))
            else:
                raise FormatError(f"unknown layer kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"layer {i}: malformed record ({exc})") from exc
    return Network(doc["input_shape"], layers, doc["label_count"])
