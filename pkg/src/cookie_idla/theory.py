"""Analytic limit values for the cluster boundary.

The two-sided hitting probability of an (alpha, beta)-perturbed Brownian
motion has a closed form: it is the upper tail of a Beta(1-alpha, 1-beta)
random variable,

    h(alpha, beta, x) = I_{1-x}(1 - alpha, 1 - beta),

where I is the regularized incomplete Beta function.  The almost-sure limit
of the normalized right boundary in the recurrent regime is the unique fixed
point of x -> h(alpha, beta, x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .environment import CookieEnvironment, Regime, RegimeTag, classify
from . import environment

__all__ = [
    "regularized_incomplete_beta",
    "h_exact",
    "fixed_point",
    "PredictionKind",
    "Prediction",
    "predict",
]

_FPMIN = 1e-300
_CF_EPS = 1e-16
_CF_MAX_ITER = 600
_BISECT_WIDTH = 1e-12


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete Beta, modified Lentz iteration."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise RuntimeError(f"incomplete beta continued fraction failed to converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only below the distribution mean
    if x < (a + 1.0) / (a + b + 2.0):
        value = front * _betacf(a, b, x) / a
    else:
        value = 1.0 - front * _betacf(b, a, 1.0 - x) / b
    return min(max(value, 0.0), 1.0)


def h_exact(alpha: float, beta: float, x: float) -> float:
    """Probability that the (alpha, beta)-perturbed BM from 0 hits x before x-1.

    Requires alpha < 1 and beta < 1; strictly decreasing in x with
    h(0) = 1 and h(1) = 0.
    """
    if alpha >= 1.0 or beta >= 1.0:
        raise ValueError("h is defined only for alpha < 1 and beta < 1")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    return regularized_incomplete_beta(1.0 - alpha, 1.0 - beta, 1.0 - x)


def fixed_point(alpha: float, beta: float) -> float:
    """Unique p in (0,1) with h_exact(alpha, beta, p) = p.

    Bisection on h(x) - x, which is strictly decreasing from 1 to -1; this
    stays robust even near alpha, beta -> 1 where h steepens sharply.
    """
    if alpha >= 1.0 or beta >= 1.0:
        raise ValueError("fixed point is defined only for alpha < 1 and beta < 1")
    lo, hi = 0.0, 1.0
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if h_exact(alpha, beta, mid) - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class PredictionKind(Enum):
    EXACT_FIXED_POINT = "exact_fixed_point"
    ONE = "one"
    ZERO = "zero"
    HALF = "half"
    MONTE_CARLO_ONLY = "monte_carlo_only"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Prediction:
    """Predicted limit of the normalized right boundary, when theory gives one."""

    kind: PredictionKind
    p: Optional[float] = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "p": self.p}


def predict(env: CookieEnvironment) -> Prediction:
    """Map an environment's regime to its limit prediction.

    Environments that are transient in both directions escape to +infinity
    with a probability that has no closed form here, so the prediction
    defers to Monte Carlo; the same applies to the unresolved critical case
    without mirror symmetry.
    """
    regime = classify(env)
    return prediction_for_regime(regime)


def prediction_for_regime(regime: Regime) -> Prediction:
    tag = regime.tag
    if tag is RegimeTag.FIXED_POINT:
        return Prediction(PredictionKind.EXACT_FIXED_POINT, fixed_point(regime.alpha, regime.beta))
    if tag in (RegimeTag.TRANSIENT_RIGHT, RegimeTag.BOUNDARY_RIGHT):
        return Prediction(PredictionKind.ONE, 1.0)
    if tag in (RegimeTag.TRANSIENT_LEFT, RegimeTag.BOUNDARY_LEFT):
        return Prediction(PredictionKind.ZERO, 0.0)
    if tag is RegimeTag.SYMMETRIC_CRITICAL:
        return Prediction(PredictionKind.HALF, 0.5)
    if tag is RegimeTag.TRANSIENT_BOTH:
        return Prediction(PredictionKind.MONTE_CARLO_ONLY, None)
    return Prediction(PredictionKind.UNKNOWN, None)


def predict_from_drifts(alpha: float, beta: float) -> Prediction:
    """Prediction for the even-split environment with the given drifts."""
    return predict(environment.from_drifts(alpha, beta))
