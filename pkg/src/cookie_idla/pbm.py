"""Perturbed Brownian motion: Y = B + alpha * max(Y) + beta * min(Y).

The discrete-time step solves the defining identity implicitly: a candidate
value is computed with the running max M and min I frozen; if it escapes
[I, M], the affected extreme is coupled to the new value and the linear
equation y = b + alpha*y + beta*I (or the mirrored one) is solved exactly.
This keeps the identity y = b + alpha*M + beta*I true at every accepted
step and respects the 1/(1-alpha), 1/(1-beta) singularity structure, which
a naive explicit update of M and I does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import TimeBudgetExceeded
from .stats import EstimateWithCI

__all__ = [
    "PbmState",
    "Hit",
    "pbm_step",
    "simulate_until_two_sided_exit",
    "estimate_h_mc",
    "DEFAULT_DT",
    "DEFAULT_T_MAX",
]

DEFAULT_DT = 1e-4
DEFAULT_T_MAX = 1e3


class Hit(Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class PbmState:
    """One path point: time, value, driving Brownian value, running extremes.

    The Brownian value is carried explicitly so the defining identity
    y = b + alpha*m + beta*i stays assertable along the path.
    """

    t: float = 0.0
    y: float = 0.0
    b: float = 0.0
    m: float = 0.0
    i: float = 0.0


def _check_parameters(alpha: float, beta: float) -> None:
    if alpha >= 1.0 or beta >= 1.0:
        raise ValueError("perturbed BM requires alpha < 1 and beta < 1")


def pbm_step(state: PbmState, db: float, alpha: float, beta: float, dt: float = 0.0) -> PbmState:
    """Advance one Brownian increment ``db`` (of variance dt)."""
    _check_parameters(alpha, beta)
    if state.i > state.m:
        raise ValueError(f"corrupt state: running min {state.i} exceeds running max {state.m}")
    b2 = state.b + db
    y0 = b2 + alpha * state.m + beta * state.i
    if y0 > state.m:
        # new maximum: solve y = b2 + alpha*y + beta*i
        y2 = (b2 + beta * state.i) / (1.0 - alpha)
        return PbmState(t=state.t + dt, y=y2, b=b2, m=y2, i=state.i)
    if y0 < state.i:
        y2 = (b2 + alpha * state.m) / (1.0 - beta)
        return PbmState(t=state.t + dt, y=y2, b=b2, m=state.m, i=y2)
    return PbmState(t=state.t + dt, y=y0, b=b2, m=state.m, i=state.i)


def simulate_until_two_sided_exit(
    alpha: float,
    beta: float,
    x: float,
    dt: float = DEFAULT_DT,
    rng: np.random.Generator | None = None,
    t_max: float = DEFAULT_T_MAX,
) -> Hit:
    """Step a fresh path until it first crosses x (upper) or x-1 (lower).

    Detection is first grid crossing, so estimates carry an O(sqrt(dt))
    discretization bias toward the interior.
    """
    _check_parameters(alpha, beta)
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie strictly in (0, 1)")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if rng is None:
        raise ValueError("an explicit random generator is required")
    state = PbmState()
    sqrt_dt = math.sqrt(dt)
    while state.t < t_max:
        state = pbm_step(state, sqrt_dt * rng.standard_normal(), alpha, beta, dt=dt)
        if state.y >= x:
            return Hit.UPPER
        if state.y <= x - 1.0:
            return Hit.LOWER
    raise TimeBudgetExceeded(f"no exit before t_max={t_max} (dt={dt}, x={x})")


def estimate_h_mc(
    alpha: float,
    beta: float,
    x: float,
    dt: float = DEFAULT_DT,
    replicas: int = 1000,
    master_seed: int = 0,
    t_max: float = DEFAULT_T_MAX,
    workers: int = 1,
) -> EstimateWithCI:
    """Monte Carlo estimate of the two-sided upper-exit probability.

    Deterministic for a fixed master seed and replica count, independent of
    worker parallelism: replica k always uses the stream keyed by k.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    from . import engine

    hits = engine.pbm_exit_sides(
        alpha, beta, x, dt, t_max, replicas, master_seed, f"pbm-h:{x}:{dt}", workers=workers
    )
    return EstimateWithCI.from_indicators(int(hits.sum()), replicas)


def sample_path(
    alpha: float,
    beta: float,
    t_end: float,
    dt: float,
    rng: np.random.Generator,
) -> list[PbmState]:
    """Full recorded path on the dt-grid, for dumps and invariant checks."""
    n = int(round(t_end / dt))
    sqrt_dt = math.sqrt(dt)
    state = PbmState()
    out = [state]
    for _ in range(n):
        state = pbm_step(state, sqrt_dt * rng.standard_normal(), alpha, beta, dt=dt)
        out.append(state)
    return out
