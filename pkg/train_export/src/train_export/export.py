"""Train digit classifiers with torch and export them in robustval's
weight format, with a cross-implementation logit-parity check."""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from robustval.data import Dataset, save_csv
from robustval.network import (
    Activation,
    Conv2D,
    Dense,
    MaxPool2D,
    Network,
    mlp_structure,
    save_network,
)

from .data import DigitData, load_digit_data

ACCURACY_FLOORS = {"fnn": 0.95, "cnn": 0.98}
PARITY_PROBES = 100
PARITY_TOL = 1e-4

_TORCH_ACTIVATIONS = {"relu": nn.ReLU, "sigmoid": nn.Sigmoid, "tanh": nn.Tanh}


@dataclass(frozen=True)
class ExportManifest:
    architecture: str
    activation: str
    test_accuracy: float
    weight_path: str
    dataset_paths: list[str]
    parity_max_deviation: float
    data_source: str


class _ChannelsLastFlatten(nn.Module):
    """Flatten (N, C, H, W) in H, W, C order to match the export target's
    row-major channels-last layout."""

    def forward(self, x):
        return x.permute(0, 2, 3, 1).flatten(1)


def build_fnn(input_dim: int, architecture: str, activation: str) -> nn.Sequential:
    hidden, out = mlp_structure(architecture)
    act = _TORCH_ACTIVATIONS[activation]
    modules: list[nn.Module] = []
    prev = input_dim
    for width in hidden:
        modules += [nn.Linear(prev, width), act()]
        prev = width
    modules.append(nn.Linear(prev, out))
    return nn.Sequential(*modules)


def build_cnn(side: int, activation: str) -> nn.Sequential:
    """Two 3x3 conv blocks (6 then 16 filters, stride-1, padding 1) with 2x2
    pooling, then dense 128 and a 10-way head."""
    if side % 4 != 0:
        raise ValueError(f"image side {side} not divisible by both pool stages")
    act = _TORCH_ACTIVATIONS[activation]
    flat = (side // 4) * (side // 4) * 16
    return nn.Sequential(
        nn.Conv2d(1, 6, 3, padding=1), act(), nn.MaxPool2d(2),
        nn.Conv2d(6, 16, 3, padding=1), act(), nn.MaxPool2d(2),
        _ChannelsLastFlatten(),
        nn.Linear(flat, 128), act(),
        nn.Linear(128, 10),
    )


def _train(model: nn.Module, data: DigitData, epochs: int, seed: int,
           image_input: bool, batch_size: int = 64, lr: float = 1e-3) -> float:
    """Adam + cross-entropy; returns test accuracy."""

    def as_batch(x: np.ndarray) -> torch.Tensor:
        t = torch.from_numpy(x).float()
        if image_input:
            t = t.reshape(-1, 1, data.side, data.side)
        return t

    g = torch.Generator().manual_seed(seed)
    train_x = as_batch(data.train_x)
    train_y = torch.from_numpy(data.train_y).long()
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    model.train()
    for _ in range(epochs):
        order = torch.randperm(len(train_x), generator=g)
        for i in range(0, len(order), batch_size):
            idx = order[i:i + batch_size]
            opt.zero_grad()
            loss = loss_fn(model(train_x[idx]), train_y[idx])
            loss.backward()
            opt.step()
    model.eval()
    with torch.no_grad():
        preds = model(as_batch(data.test_x)).argmax(1).numpy()
    return float(np.mean(preds == data.test_y))


def to_network(model: nn.Sequential, input_shape: tuple[int, ...]) -> Network:
    """Translate a trained sequential torch model into robustval layers.

    Weights are exported in 64-bit with no quantization.
    """
    layers = []
    label_count = None
    for module in model:
        if isinstance(module, nn.Linear):
            w = module.weight.detach().double().numpy()
            b = module.bias.detach().double().numpy()
            layers.append(Dense(w, b))
            label_count = w.shape[0]
        elif isinstance(module, nn.Conv2d):
            # torch stores (out_c, in_c, kh, kw); target wants (kh, kw, in_c, out_c)
            f = module.weight.detach().double().numpy().transpose(2, 3, 1, 0)
            b = module.bias.detach().double().numpy()
            layers.append(Conv2D(f, b, stride=module.stride[0],
                                 padding=module.padding[0]))
        elif isinstance(module, nn.MaxPool2d):
            k = module.kernel_size
            layers.append(MaxPool2D((k, k) if isinstance(k, int) else tuple(k)))
        elif isinstance(module, (nn.ReLU, nn.Sigmoid, nn.Tanh)):
            layers.append(Activation(type(module).__name__.lower()))
        elif isinstance(module, _ChannelsLastFlatten):
            continue  # implicit in the flat layout
        else:
            raise ValueError(f"cannot export module {type(module).__name__}")
    return Network(input_shape, layers, label_count)


def parity_deviation(model: nn.Module, net: Network, input_shape: tuple[int, ...],
                     probes: int = PARITY_PROBES, seed: int = 0) -> float:
    """Max abs logit deviation between the torch model (in 64-bit) and the
    exported network on random probe inputs in [0, 1]."""
    rng = np.random.default_rng(seed)
    model = model.double().eval()
    image_input = len(input_shape) == 3
    worst = 0.0
    with torch.no_grad():
        for _ in range(probes):
            x = rng.random(int(np.prod(input_shape)))
            t = torch.from_numpy(x)
            if image_input:
                t = t.reshape(1, input_shape[2], input_shape[0], input_shape[1])
            else:
                t = t.reshape(1, -1)
            ref = model(t).numpy().ravel()
            got, _ = net.forward(x)
            worst = max(worst, float(np.max(np.abs(ref - got))))
    return worst


def train_and_export(architecture: str, activation: str = "relu",
                     epochs: int = 60, seed: int = 0, out: str = "export",
                     data: DigitData | None = None,
                     data_dir: str | None = None,
                     slice_size: int = 100) -> ExportManifest:
    """Train the requested architecture, export weights plus dataset slices,
    verify logit parity, and write a manifest.

    architecture is either a dense structure string like "3x30,10" or the
    literal "cnn" for the two-block convolutional model.
    """
    if data is None:
        data = load_digit_data(data_dir, seed)
    torch.manual_seed(seed)
    is_cnn = architecture.strip().lower() == "cnn"
    if is_cnn:
        model = build_cnn(data.side, activation)
        input_shape: tuple[int, ...] = (data.side, data.side, 1)
        floor = ACCURACY_FLOORS["cnn"]
    else:
        model = build_fnn(data.input_dim, architecture, activation)
        input_shape = (data.input_dim,)
        floor = ACCURACY_FLOORS["fnn"]

    accuracy = _train(model, data, epochs, seed, image_input=is_cnn)
    if accuracy < floor:
        warnings.warn(f"test accuracy {accuracy:.4f} below the {floor:.0%} "
                      "target; exporting anyway", stacklevel=2)

    model = model.double().eval()
    net = to_network(model, input_shape)
    deviation = parity_deviation(model, net, input_shape, seed=seed)
    if deviation > PARITY_TOL:
        raise RuntimeError(f"logit parity violated: max deviation {deviation:.2e}")

    os.makedirs(out, exist_ok=True)
    weight_path = os.path.join(out, "network.json")
    save_network(net, weight_path)
    slice_paths = []
    for name, xs, ys in (("train", data.train_x, data.train_y),
                         ("test", data.test_x, data.test_y)):
        path = os.path.join(out, f"{name}_slice.csv")
        save_csv(Dataset(xs[:slice_size], ys[:slice_size]), path)
        slice_paths.append(path)

    manifest = ExportManifest(
        architecture=architecture,
        activation=activation,
        test_accuracy=accuracy,
        weight_path=weight_path,
        dataset_paths=slice_paths,
        parity_max_deviation=deviation,
        data_source=data.source,
    )
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(asdict(manifest), fh, indent=2)
    return manifest
