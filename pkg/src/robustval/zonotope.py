"""Sound incomplete certification of label invariance over L-infinity boxes.

Two abstract domains: zonotopes (center + shared noise-symbol generators,
exact under affine maps) and plain interval arithmetic. Both propagate an
input box through the network; the zonotope keeps cross-neuron
correlations and certifies strictly more in practice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import ACTIVATIONS, Activation, Conv2D, Dense, MaxPool2D, Network, sigmoid


@dataclass(frozen=True)
class Zonotope:
    center: np.ndarray  # (n,)
    generators: np.ndarray  # (n, k)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        r = np.abs(self.generators).sum(axis=1)
        return self.center - r, self.center + r

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def num_generators(self) -> int:
        return self.generators.shape[1]


@dataclass(frozen=True)
class Interval:
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class Verdict:
    robust: bool
    margins: np.ndarray | None = field(default=None, compare=False)

    def __bool__(self) -> bool:
        return self.robust


def input_region(x: np.ndarray, delta: float, clip: tuple[float, float] = (0.0, 1.0)) -> Zonotope:
    """Box [x-delta, x+delta] intersected with the valid pixel range,
    one private noise symbol per pixel."""
    x = np.asarray(x, dtype=np.float64).ravel()
    lo = np.maximum(x - delta, clip[0])
    hi = np.minimum(x + delta, clip[1])
    center = (lo + hi) / 2.0
    return Zonotope(center, np.diag((hi - lo) / 2.0))


def affine_transform(z: Zonotope, w: np.ndarray, b: np.ndarray) -> Zonotope:
    """Exact affine image; generator count is unchanged."""
    return Zonotope(w @ z.center + b, w @ z.generators)


def _append_fresh(g: np.ndarray, magnitudes: np.ndarray) -> np.ndarray:
    """Append one private generator column per nonzero magnitude."""
    idx = np.nonzero(magnitudes)[0]
    if idx.size == 0:
        return g
    fresh = np.zeros((g.shape[0], idx.size))
    fresh[idx, np.arange(idx.size)] = magnitudes[idx]
    return np.hstack([g, fresh])


def relu_transform(z: Zonotope) -> Zonotope:
    """Minimal-area parallelogram relaxation per crossing neuron."""
    l, u = z.bounds()
    pos = l >= 0.0
    cross = (~pos) & (u > 0.0)
    lam = np.where(pos, 1.0, 0.0)
    mu = np.zeros(z.dim)
    lc, uc = l[cross], u[cross]
    lam[cross] = uc / (uc - lc)
    mu[cross] = -lam[cross] * lc / 2.0
    center = lam * z.center + mu
    gens = lam[:, None] * z.generators
    return Zonotope(center, _append_fresh(gens, mu))


_SSHAPE = {
    "sigmoid": (sigmoid, lambda v: sigmoid(v) * (1.0 - sigmoid(v))),
    "tanh": (np.tanh, lambda v: 1.0 - np.tanh(v) ** 2),
}


def sshape_transform(z: Zonotope, function: str) -> Zonotope:
    """Parallel-slope relaxation for sigmoid/tanh with a symmetric error band."""
    g, gprime = _SSHAPE[function]
    l, u = z.bounds()
    lam = np.minimum(gprime(l), gprime(u))
    mu1 = (g(u) + g(l) - lam * (u + l)) / 2.0
    mu2 = np.maximum((g(u) - g(l) - lam * (u - l)) / 2.0, 0.0)
    center = lam * z.center + mu1
    gens = lam[:, None] * z.generators
    return Zonotope(center, _append_fresh(gens, mu2))


def maxpool_transform(z: Zonotope, pool_idx: np.ndarray) -> Zonotope:
    """Max over each pool group given by `pool_idx` (groups x window).

    A cell whose lower bound dominates every other cell's upper bound
    passes its affine form through exactly; otherwise the pool output is
    the uncorrelated interval [max lower, max upper].
    """
    l, u = z.bounds()
    lw, uw = l[pool_idx], u[pool_idx]
    rows = np.arange(pool_idx.shape[0])
    best = np.argmax(lw, axis=1)
    l_best = lw[rows, best]
    masked = uw.copy()
    masked[rows, best] = -np.inf
    other_u = masked.max(axis=1)
    dominant = l_best >= other_u
    src = pool_idx[rows, best]
    l_max, u_max = lw.max(axis=1), uw.max(axis=1)
    center = np.where(dominant, z.center[src], (l_max + u_max) / 2.0)
    gens = z.generators[src] * dominant[:, None]
    fresh_mag = np.where(dominant, 0.0, (u_max - l_max) / 2.0)
    return Zonotope(center, _append_fresh(gens, fresh_mag))


def rebox(z: Zonotope) -> Zonotope:
    """Forget correlations: one private symbol per dimension."""
    l, u = z.bounds()
    return Zonotope((l + u) / 2.0, np.diag((u - l) / 2.0))


def propagate_zonotope(net: Network, z: Zonotope, rebox_each_layer: bool = False) -> Zonotope:
    for layer, plan in zip(net.layers, net.plans):
        if isinstance(layer, Dense):
            z = affine_transform(z, layer.weights, layer.bias)
        elif isinstance(layer, Conv2D):
            oh, ow, f = plan.out_shape
            bias = np.tile(layer.bias, oh * ow)
            cols = np.vstack([z.center[None, :], z.generators.T])
            out = plan.apply_cols(cols)
            z = Zonotope(out[0] + bias, out[1:].T)
        elif isinstance(layer, MaxPool2D):
            z = maxpool_transform(z, plan.idx)
        elif isinstance(layer, Activation):
            z = relu_transform(z) if layer.function == "relu" else sshape_transform(z, layer.function)
        if rebox_each_layer:
            z = rebox(z)
    return z


def propagate_interval(net: Network, lower: np.ndarray, upper: np.ndarray) -> Interval:
    """Direct interval arithmetic (all activations here are monotone)."""
    lo, hi = np.asarray(lower, float).ravel(), np.asarray(upper, float).ravel()
    for layer, plan in zip(net.layers, net.plans):
        if isinstance(layer, Dense):
            mid, rad = (lo + hi) / 2.0, (hi - lo) / 2.0
            mid2 = layer.weights @ mid + layer.bias
            rad2 = np.abs(layer.weights) @ rad
            lo, hi = mid2 - rad2, mid2 + rad2
        elif isinstance(layer, Conv2D):
            oh, ow, f = plan.out_shape
            bias = np.tile(layer.bias, oh * ow)
            mid, rad = (lo + hi) / 2.0, (hi - lo) / 2.0
            mid2 = plan.apply_cols(mid[None, :])[0] + bias
            rad2 = plan.apply_cols(rad[None, :], np.abs(plan.filter_mat))[0]
            lo, hi = mid2 - rad2, mid2 + rad2
        elif isinstance(layer, MaxPool2D):
            lo, hi = lo[plan.idx].max(axis=1), hi[plan.idx].max(axis=1)
        elif isinstance(layer, Activation):
            fn = ACTIVATIONS[layer.function][0]
            lo, hi = fn(lo), fn(hi)
    return Interval(lo, hi)


def dominance_lower_bound(z: Zonotope, c: int, k: int) -> float:
    """Certified lower bound of score_c - score_k over the zonotope.

    Computed on the difference affine form so shared-symbol correlations
    cancel; never the difference of per-class interval bounds.
    """
    if c == k:
        raise ValueError("classes must differ")
    diff = z.generators[c] - z.generators[k]
    return float(z.center[c] - z.center[k] - np.abs(diff).sum())


def is_robust(net: Network, x: np.ndarray, delta: float, domain: str = "zonotope") -> Verdict:
    """Sound check that the predicted label is invariant over the clipped delta-box.

    Never certifies when a label change exists within the region; may
    return a non-robust (unknown) verdict on robust instances.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    _, label = net.forward(x)
    if delta == 0.0:
        return Verdict(True, None)
    if domain == "zonotope":
        z = propagate_zonotope(net, input_region(x, delta))
        margins = np.array([
            dominance_lower_bound(z, label, k)
            for k in range(net.label_count) if k != label
        ])
    elif domain == "interval":
        x = np.asarray(x, float).ravel()
        iv = propagate_interval(net, np.maximum(x - delta, 0.0), np.minimum(x + delta, 1.0))
        margins = np.array([
            iv.lower[label] - iv.upper[k]
            for k in range(net.label_count) if k != label
        ])
    else:
        raise ValueError(f"unknown domain {domain!r}")
    return Verdict(bool(np.all(margins > 0.0)), margins)
