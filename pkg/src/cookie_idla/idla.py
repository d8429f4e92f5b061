"""Cluster growth: one fresh walker per unit time moves the right boundary.

The occupied region at time n is the integer interval [d - n, d], so only
(n, d) is stored; the left boundary is derived.  The walker launched at
time n is stopped at d + 1 (boundary advances) or at d - n - 1 (it does
not), which keeps the interval width at n + 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import engine, walk
from .environment import CookieEnvironment
from .walk import ExitSide, Side

__all__ = ["Cluster", "TrajectoryPoint", "x_value", "advance", "run_trajectory"]

DEFAULT_MAX_STEPS = walk.DEFAULT_MAX_STEPS


@dataclass(frozen=True)
class Cluster:
    """Time and right boundary of the growing interval."""

    n: int = 0
    d: int = 0

    def __post_init__(self):
        if not 0 <= self.d <= self.n:
            raise ValueError(f"need 0 <= d <= n, got d={self.d}, n={self.n}")

    @property
    def left(self) -> int:
        return self.d - self.n

    @property
    def x(self) -> float:
        return (self.d + 1) / (self.n + 2)


def x_value(cluster: Cluster) -> float:
    """Normalized right boundary (d+1)/(n+2), strictly inside (0, 1)."""
    return cluster.x


def advance(
    cluster: Cluster,
    env: CookieEnvironment,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[Cluster, ExitSide]:
    """Launch one fresh walker and move the boundary if it exits right."""
    right = cluster.d + 1
    left = cluster.d - cluster.n - 1
    assert right - left == cluster.n + 2
    exit_side = walk.run_until_exit(env, right, left, rng, max_steps=max_steps)
    grew = 1 if exit_side.side is Side.RIGHT else 0
    return Cluster(n=cluster.n + 1, d=cluster.d + grew), exit_side


class TrajectoryPoint(NamedTuple):
    n: int
    d: int
    x: float


def run_trajectory(
    env: CookieEnvironment,
    n_steps: int,
    seed: int,
    record_every: Optional[int] = None,
    replica_index: int = 0,
    experiment_id: str = "idla",
) -> list[TrajectoryPoint]:
    """Thinned boundary trajectory, deterministic for a given seed.

    Records every ``record_every``-th point plus the final one; the default
    thinning keeps at most ~10^4 points.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if record_every is None:
        record_every = max(1, n_steps // 10_000)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    d_path = engine.idla_path(env, n_steps, seed, experiment_id, replica_index)
    points = []
    for n in range(0, n_steps + 1, record_every):
        points.append(TrajectoryPoint(n, int(d_path[n]), (d_path[n] + 1.0) / (n + 2.0)))
    if points[-1].n != n_steps:
        points.append(TrajectoryPoint(n_steps, int(d_path[-1]), (d_path[-1] + 1.0) / (n_steps + 2.0)))
    return points
