"""Single excited random walk with exact local-time bookkeeping.

This is the reference implementation: one visible step per call, a sparse
map of visit counts, and first-exit queries.  It is deliberately simple;
large-scale experiments go through the compiled kernels in ``engine``,
which reproduce the same law and are cross-checked against this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .environment import CookieEnvironment
from .errors import MaxStepsExceeded

__all__ = ["Side", "ExitSide", "WalkState", "step_prob", "step", "run_until_exit"]

DEFAULT_MAX_STEPS = 10**9


class Side(Enum):
    RIGHT = "right"
    LEFT = "left"


@dataclass(frozen=True)
class ExitSide:
    side: Side
    steps_taken: int


@dataclass
class WalkState:
    """Position, per-site visit counts, and step counter of one walk.

    The count at the current position includes the current visit, so a
    site's first visit reads cookie 1.  Invariants: counts sum to
    steps + 1, and the count at ``position`` is at least 1.
    """

    position: int = 0
    local_times: dict[int, int] = field(default_factory=lambda: {0: 1})
    steps: int = 0


def step_prob(env: CookieEnvironment, state: WalkState) -> float:
    """Probability that the next step is +1.

    Depends only on the sign of the position and the local time there:
    exactly 1/2 at the origin, cookie i on the i-th visit to a site, and
    1/2 once that side's stack is exhausted.
    """
    x = state.position
    if x == 0:
        return 0.5
    stack = env.pos_cookies if x > 0 else env.neg_cookies
    i = state.local_times[x]
    return stack[i - 1] if i <= len(stack) else 0.5


def step(env: CookieEnvironment, state: WalkState, rng: np.random.Generator) -> WalkState:
    """Advance the walk by one nearest-neighbor step (mutates ``state``)."""
    p_up = step_prob(env, state)
    move = 1 if rng.random() < p_up else -1
    state.position += move
    state.local_times[state.position] = state.local_times.get(state.position, 0) + 1
    state.steps += 1
    return state


def run_until_exit(
    env: CookieEnvironment,
    right: int,
    left: int,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> ExitSide:
    """Run a fresh walk from 0 until it first reaches ``right`` or ``left``."""
    if not (left < 0 < right):
        raise ValueError(f"barriers must satisfy left < 0 < right, got ({right}, {left})")
    if max_steps < 0:
        raise ValueError("max_steps must be nonnegative")
    state = WalkState()
    while state.steps < max_steps:
        step(env, state, rng)
        if state.position == right:
            return ExitSide(Side.RIGHT, state.steps)
        if state.position == left:
            return ExitSide(Side.LEFT, state.steps)
    raise MaxStepsExceeded(
        f"no barrier hit within {max_steps} steps (barriers {right}, {left})"
    )
