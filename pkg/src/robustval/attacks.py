"""Gradient-sign attacks and random-search falsification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network

DEFAULT_EPS_GRID = tuple(np.linspace(0.002, 0.1, 25))


@dataclass(frozen=True)
class AttackResult:
    original: np.ndarray
    adversarial: np.ndarray
    original_label: int
    adversarial_label: int
    success: bool
    perturbation_linf: float


def _result(net: Network, x: np.ndarray, adv: np.ndarray, label: int) -> AttackResult:
    _, adv_label = net.forward(adv)
    return AttackResult(
        original=x,
        adversarial=adv,
        original_label=label,
        adversarial_label=adv_label,
        success=adv_label != label,
        perturbation_linf=float(np.abs(adv - x).max()) if adv.size else 0.0,
    )


def fgsm(net: Network, x, label: int, eps: float) -> AttackResult:
    """Single gradient-sign step of size eps, clipped to [0,1]."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    x = np.asarray(x, float).ravel()
    g = net.input_gradient(x, label)
    adv = np.clip(x + eps * np.sign(g), 0.0, 1.0)
    return _result(net, x, adv, label)


def pgd(net: Network, x, label: int, eps: float, steps: int = 10,
        step_size: float | None = None) -> AttackResult:
    """Iterated gradient-sign steps projected onto the eps-box and [0,1].

    The first step is the full-eps sign step, so a single-step run
    coincides with fgsm; iteration stops early at the first label change.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x, float).ravel()
    if step_size is None:
        step_size = max(eps / 4.0, 1e-4)
    lo, hi = np.clip(x - eps, 0.0, 1.0), np.clip(x + eps, 0.0, 1.0)
    adv = np.clip(x + eps * np.sign(net.input_gradient(x, label)), lo, hi)
    result = _result(net, x, adv, label)
    for _ in range(steps - 1):
        if result.success:
            return result
        adv = np.clip(adv + step_size * np.sign(net.input_gradient(adv, label)), lo, hi)
        result = _result(net, x, adv, label)
    return result


def min_pgd(net: Network, x, label: int, eps_grid=DEFAULT_EPS_GRID,
            steps: int = 10) -> AttackResult:
    """Smallest eps in an ascending grid for which pgd succeeds; emulates
    small-perturbation (strong) attacks."""
    eps_grid = list(eps_grid)
    if any(b <= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ValueError("eps_grid must be ascending")
    last = None
    for eps in eps_grid:
        last = pgd(net, x, label, eps, steps)
        if last.success:
            return last
    return last


def falsify(net: Network, x, delta: float, trials: int = 10000,
            seed: int = 0) -> np.ndarray | None:
    """Random search for a label change inside the clipped delta-box.

    Returns the first counterexample in draw order (deterministic per
    seed) or None. Serves as the empirical soundness oracle for the
    verifier: a Robust verdict at delta must never coexist with a hit.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x = np.asarray(x, float).ravel()
    _, label = net.forward(x)
    lo, hi = np.clip(x - delta, 0.0, 1.0), np.clip(x + delta, 0.0, 1.0)
    rng = np.random.default_rng(seed)
    chunk = 1024
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        ys = lo + rng.random((n, x.size)) * (hi - lo)
        labels = np.argmax(net.forward_batch(ys), axis=1)
        hits = np.nonzero(labels != label)[0]
        if hits.size:
            return ys[hits[0]]
        done += n
    return None


def min_random(net: Network, x, label: int, eps_grid=DEFAULT_EPS_GRID,
               trials: int = 2000, seed: int = 0) -> AttackResult:
    """Black-box stand-in: smallest eps at which random search finds an
    adversarial point."""
    x = np.asarray(x, float).ravel()
    last_adv = x
    for eps in eps_grid:
        cex = falsify(net, x, eps, trials, seed)
        if cex is not None:
            return _result(net, x, cex, label)
    return _result(net, x, last_adv, label)
