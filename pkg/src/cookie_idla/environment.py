"""Cookie environments: per-site bias stacks and the drift totals they induce.

An environment stores one finite stack of step-up probabilities for the
positive half-line and one for the negative half-line.  The i-th visit to a
site consumes cookie i of that side's stack; once a stack is exhausted the
site behaves like a fair coin, so the total signed drift stored on each side
is a finite sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import HypothesisViolation

__all__ = [
    "CookieEnvironment",
    "ValidationReport",
    "RegimeTag",
    "Regime",
    "BOUNDARY_TOL",
    "validate",
    "ensure_valid",
    "alpha",
    "beta",
    "mirror",
    "is_mirror_symmetric",
    "classify",
    "from_drifts",
]

# |alpha - 1| below this counts as sitting exactly on the critical boundary.
# Encode boundary cases with dyadic cookie values (e.g. two 0.75 cookies give
# alpha = 1.0 exactly) so the comparison is exact rather than borderline.
BOUNDARY_TOL = 1e-12

# Engine count arrays are uint8; plenty for any realistic stack.
MAX_STACK_LEN = 64


@dataclass(frozen=True)
class CookieEnvironment:
    """Finite cookie stacks for the positive and negative half-lines.

    ``pos_cookies[i-1]`` is the probability of a +1 step on the i-th visit
    to a positive site; ``neg_cookies`` likewise for negative sites.  All
    later visits use probability 1/2.  Site 0 is always fair.
    """

    pos_cookies: tuple[float, ...] = ()
    neg_cookies: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pos_cookies", tuple(float(p) for p in self.pos_cookies))
        object.__setattr__(self, "neg_cookies", tuple(float(p) for p in self.neg_cookies))

    def to_dict(self) -> dict:
        return {"pos_cookies": list(self.pos_cookies), "neg_cookies": list(self.neg_cookies)}

    @classmethod
    def from_dict(cls, data: dict) -> "CookieEnvironment":
        return cls(
            pos_cookies=tuple(data.get("pos_cookies", ())),
            neg_cookies=tuple(data.get("neg_cookies", ())),
        )


@dataclass(frozen=True)
class ValidationReport:
    fatal: tuple[str, ...]
    hypothesis_ok: bool

    @property
    def ok(self) -> bool:
        return not self.fatal


class RegimeTag(Enum):
    FIXED_POINT = "fixed_point"
    TRANSIENT_RIGHT = "transient_right"
    TRANSIENT_LEFT = "transient_left"
    TRANSIENT_BOTH = "transient_both"
    BOUNDARY_RIGHT = "boundary_right"
    BOUNDARY_LEFT = "boundary_left"
    SYMMETRIC_CRITICAL = "symmetric_critical"
    UNKNOWN_CRITICAL = "unknown_critical"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    alpha: float
    beta: float


def _sign_consistent(values: Iterable[float]) -> bool:
    deviations = [v - 0.5 for v in values]
    return all(d >= 0.0 for d in deviations) or all(d <= 0.0 for d in deviations)


def validate(env: CookieEnvironment) -> ValidationReport:
    """Range-check the stacks and flag sign-inconsistent ones.

    Probabilities outside (0,1) are fatal; mixed-sign stacks only set
    ``hypothesis_ok=False``.  Simulation is still permitted in that case,
    but regime classification and limit predictions refuse such
    environments.
    """
    fatal = []
    for name, stack in (("pos_cookies", env.pos_cookies), ("neg_cookies", env.neg_cookies)):
        for i, p in enumerate(stack):
            if not (0.0 < p < 1.0):
                fatal.append(f"{name}[{i}] = {p!r} is outside the open interval (0, 1)")
        if len(stack) > MAX_STACK_LEN:
            fatal.append(f"{name} has {len(stack)} cookies; at most {MAX_STACK_LEN} supported")
    hypothesis_ok = _sign_consistent(env.pos_cookies) and _sign_consistent(env.neg_cookies)
    return ValidationReport(fatal=tuple(fatal), hypothesis_ok=hypothesis_ok)


def ensure_valid(env: CookieEnvironment, require_hypothesis: bool = False) -> None:
    report = validate(env)
    if not report.ok:
        raise ValueError("invalid cookie environment: " + "; ".join(report.fatal))
    if require_hypothesis and not report.hypothesis_ok:
        raise HypothesisViolation(
            "cookie deviations from 1/2 must be sign-consistent on each side"
        )


def alpha(env: CookieEnvironment) -> float:
    """Total signed drift stored on the positive side."""
    return sum(2.0 * p - 1.0 for p in env.pos_cookies)


def beta(env: CookieEnvironment) -> float:
    """Total signed drift stored on the negative side (toward -infinity)."""
    return -sum(2.0 * p - 1.0 for p in env.neg_cookies)


def mirror(env: CookieEnvironment) -> CookieEnvironment:
    """Environment of the reflected walk: sides swapped, each p replaced by 1-p."""
    return CookieEnvironment(
        pos_cookies=tuple(1.0 - q for q in env.neg_cookies),
        neg_cookies=tuple(1.0 - p for p in env.pos_cookies),
    )


def _canonical(stack: Sequence[float]) -> tuple[float, ...]:
    # trailing fair cookies are no-ops: drop them
    end = len(stack)
    while end > 0 and abs(stack[end - 1] - 0.5) <= BOUNDARY_TOL:
        end -= 1
    return tuple(stack[:end])


def _stacks_close(a: Sequence[float], b: Sequence[float]) -> bool:
    return len(a) == len(b) and all(abs(u - v) <= BOUNDARY_TOL for u, v in zip(a, b))


def is_mirror_symmetric(env: CookieEnvironment) -> bool:
    """True when the walk and its reflection have the same law.

    Compared within the boundary tolerance, so complement pairs built in
    floating point (e.g. 0.9 against 0.1) count as symmetric.
    """
    m = mirror(env)
    return _stacks_close(_canonical(env.pos_cookies), _canonical(m.pos_cookies)) and _stacks_close(
        _canonical(env.neg_cookies), _canonical(m.neg_cookies)
    )


def classify(env: CookieEnvironment) -> Regime:
    """Place the environment in exactly one limit regime of the (alpha, beta) plane."""
    ensure_valid(env, require_hypothesis=True)
    a = alpha(env)
    b = beta(env)
    a_one = abs(a - 1.0) <= BOUNDARY_TOL
    b_one = abs(b - 1.0) <= BOUNDARY_TOL
    a_gt = a > 1.0 and not a_one
    b_gt = b > 1.0 and not b_one
    if a_one and b_one:
        tag = RegimeTag.SYMMETRIC_CRITICAL if is_mirror_symmetric(env) else RegimeTag.UNKNOWN_CRITICAL
    elif a_gt and b_gt:
        tag = RegimeTag.TRANSIENT_BOTH
    elif a_gt:
        tag = RegimeTag.TRANSIENT_RIGHT
    elif b_gt:
        tag = RegimeTag.TRANSIENT_LEFT
    elif a_one:
        tag = RegimeTag.BOUNDARY_RIGHT
    elif b_one:
        tag = RegimeTag.BOUNDARY_LEFT
    else:
        tag = RegimeTag.FIXED_POINT
    return Regime(tag=tag, alpha=a, beta=b)


def from_drifts(alpha_target: float, beta_target: float) -> CookieEnvironment:
    """Build the smallest even-split environment with the requested drifts.

    Each side uses k = floor(|drift|) + 1 identical cookies of value
    (1 +- drift/k)/2, so the stored values stay inside (0,1) and the drift
    sums are exact for dyadic targets.
    """

    def stack(drift: float, sign: float) -> tuple[float, ...]:
        if drift == 0.0:
            return ()
        k = int(abs(drift)) + 1
        while abs(drift) / k > 0.999:  # keep cookies strictly inside (0, 1)
            k += 1
        return tuple((1.0 + sign * drift / k) / 2.0 for _ in range(k))

    return CookieEnvironment(pos_cookies=stack(alpha_target, +1.0), neg_cookies=stack(beta_target, -1.0))
