"""Runtime acceptance policies over robustness radii.

Two mechanisms: a plain radius threshold, and a sliding-window rule that
additionally watches whether the incoming radius breaks the normality of
the recent accepted-radius stream (D'Agostino-Pearson omnibus test).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DegenerateSampleError, InsufficientSampleError

MIN_WINDOW = 20  # the skewness/kurtosis transforms are unreliable below this


def dagostino_pearson_pvalue(samples) -> float:
    """Omnibus normality test: K^2 = Z1(skew)^2 + Z2(kurtosis)^2.

    Z1 uses D'Agostino's (1970) skewness transform, Z2 the
    Anscombe-Glynn (1983) kurtosis transform; the p-value is the exact
    chi-square survival at 2 degrees of freedom, exp(-K^2 / 2).
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < MIN_WINDOW:
        raise InsufficientSampleError(f"need at least {MIN_WINDOW} samples, got {n}")
    d = x - x.mean()
    m2 = float((d ** 2).mean())
    if m2 == 0.0:
        raise DegenerateSampleError("sample variance is zero")
    g1 = float((d ** 3).mean()) / m2 ** 1.5
    b2 = float((d ** 4).mean()) / m2 ** 2

    # skewness transform
    y = g1 * math.sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)))
    beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) \
        / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0))
    w2 = -1.0 + math.sqrt(2.0 * (beta2 - 1.0))
    delta = 1.0 / math.sqrt(0.5 * math.log(w2))
    alpha = math.sqrt(2.0 / (w2 - 1.0))
    y = 1.0 if y == 0.0 else y
    z1 = delta * math.log(y / alpha + math.sqrt((y / alpha) ** 2 + 1.0))

    # kurtosis transform
    eb2 = 3.0 * (n - 1.0) / (n + 1.0)
    varb2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) ** 2 * (n + 3.0) * (n + 5.0))
    xk = (b2 - eb2) / math.sqrt(varb2)
    sqrtbeta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) \
        * math.sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)))
    a = 6.0 + 8.0 / sqrtbeta1 * (2.0 / sqrtbeta1 + math.sqrt(1.0 + 4.0 / sqrtbeta1 ** 2))
    term1 = 1.0 - 2.0 / (9.0 * a)
    denom = 1.0 + xk * math.sqrt(2.0 / (a - 4.0))
    term2 = math.copysign(abs((1.0 - 2.0 / a) / abs(denom)) ** (1.0 / 3.0), denom)
    z2 = (term1 - term2) / math.sqrt(2.0 / (9.0 * a))

    return math.exp(-(z1 * z1 + z2 * z2) / 2.0)


class Reason(Enum):
    ABOVE_THRESHOLD = "AboveThreshold"
    DISTRIBUTION_PRESERVED = "DistributionPreserved"
    BELOW_THRESHOLD_AND_DISTRIBUTION_BROKEN = "BelowThresholdAndDistributionBroken"


@dataclass(frozen=True)
class Decision:
    accepted: bool
    reason: Reason
    p_before: float | None = None
    p_after: float | None = None
    diagnostic: str | None = None


@dataclass(frozen=True)
class ThresholdPolicy:
    theta: float
    domain: str = "zonotope"

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be > 0")


def threshold_validate(radius: float, policy: ThresholdPolicy) -> Decision:
    """Accept iff radius >= theta (the boundary is inclusive)."""
    if radius >= policy.theta:
        return Decision(True, Reason.ABOVE_THRESHOLD)
    return Decision(False, Reason.BELOW_THRESHOLD_AND_DISTRIBUTION_BROKEN)


@dataclass(frozen=True)
class WindowState:
    queue: tuple[float, ...]  # s most recent accepted radii, oldest first
    sigma0: float
    sigma1: float
    s: int

    def __post_init__(self):
        if self.s < MIN_WINDOW:
            raise ValueError(f"window size must be >= {MIN_WINDOW}")
        if len(self.queue) != self.s:
            raise ValueError(f"queue holds {len(self.queue)} radii, expected {self.s}")
        if any(r < 0 for r in self.queue):
            raise ValueError("radii must be >= 0")


def bootstrap_window(valid_radii, s: int = 50, sigma0: float = 0.014,
                     sigma1: float = 0.001) -> WindowState:
    """Initialize the window from the last s radii of a trusted stream."""
    radii = [float(r) for r in valid_radii]
    if len(radii) < s:
        raise ValueError(f"need at least {s} bootstrap radii, got {len(radii)}")
    return WindowState(tuple(radii[-s:]), sigma0, sigma1, s)


def window_step(state: WindowState, radius: float) -> tuple[Decision, WindowState]:
    """One sliding-window acceptance step.

    The incoming radius is appended (queue indices 0..s); it is accepted
    when it clears sigma0 outright, or when the window p-value does not
    drop by more than sigma1. Acceptance slides the window (drop index 0);
    rejection drops the newcomer, leaving the window unchanged.
    """
    radius = float(radius)
    q = state.queue + (radius,)
    if radius >= state.sigma0:
        return Decision(True, Reason.ABOVE_THRESHOLD), replace(state, queue=q[1:])
    try:
        p_before = dagostino_pearson_pvalue(q[:state.s])
        p_after = dagostino_pearson_pvalue(q[1:])
    except DegenerateSampleError as exc:
        return (
            Decision(False, Reason.BELOW_THRESHOLD_AND_DISTRIBUTION_BROKEN,
                     diagnostic=str(exc)),
            state,
        )
    if p_before - p_after <= state.sigma1:
        return (
            Decision(True, Reason.DISTRIBUTION_PRESERVED, p_before, p_after),
            replace(state, queue=q[1:]),
        )
    return (
        Decision(False, Reason.BELOW_THRESHOLD_AND_DISTRIBUTION_BROKEN, p_before, p_after),
        state,
    )
