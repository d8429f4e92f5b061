"""Small statistics helpers: Monte Carlo estimates and the two-sample KS test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EstimateWithCI",
    "ks_statistic",
    "ks_critical_value",
    "ks_pvalue",
]


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with standard error; aggregation is order-independent.

    ``stderr`` is the sample standard deviation divided by sqrt(replicas);
    with a single replica it is degenerate and reported as NaN.
    """

    mean: float
    stderr: float
    replicas: int

    @classmethod
    def from_samples(cls, values) -> "EstimateWithCI":
        arr = np.asarray(values, dtype=float)
        n = arr.size
        if n == 0:
            raise ValueError("need at least one replica")
        if n == 1:
            return cls(mean=float(arr[0]), stderr=float("nan"), replicas=1)
        return cls(
            mean=float(arr.mean()),
            stderr=float(arr.std(ddof=1) / math.sqrt(n)),
            replicas=n,
        )

    @classmethod
    def from_indicators(cls, successes: int, replicas: int) -> "EstimateWithCI":
        if replicas < 1:
            raise ValueError("need at least one replica")
        mean = successes / replicas
        if replicas == 1:
            return cls(mean=mean, stderr=float("nan"), replicas=1)
        var = mean * (1.0 - mean) * replicas / (replicas - 1)
        return cls(mean=mean, stderr=math.sqrt(var / replicas), replicas=replicas)

    @classmethod
    def exact(cls, value: float, replicas: int = 1) -> "EstimateWithCI":
        """Degenerate estimate for events decided without simulation."""
        return cls(mean=value, stderr=0.0, replicas=replicas)

    def to_dict(self) -> dict:
        stderr = None if math.isnan(self.stderr) else self.stderr
        return {"mean": self.mean, "stderr": stderr, "replicas": self.replicas}


def ks_statistic(sample_a, sample_b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical_value(n_a: int, n_b: int, level: float = 0.01) -> float:
    """Asymptotic two-sided rejection threshold for the KS statistic."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    c = math.sqrt(-0.5 * math.log(level / 2.0))
    return c * math.sqrt((n_a + n_b) / (n_a * n_b))


def ks_pvalue(statistic: float, n_a: int, n_b: int) -> float:
    """Asymptotic two-sided p-value via the Kolmogorov series."""
    en = math.sqrt(n_a * n_b / (n_a + n_b))
    lam = (en + 0.12 + 0.11 / en) * statistic
    if lam < 1.1e-16:
        return 1.0
    total = 0.0
    sign = 1.0
    for r in range(1, 101):
        term = math.exp(-2.0 * lam * lam * r * r)
        total += sign * term
        if term <= 1.1e-16 * total or term == 0.0:
            break
        sign = -sign
    return min(max(2.0 * total, 0.0), 1.0)
