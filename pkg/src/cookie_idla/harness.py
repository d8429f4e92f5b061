"""Monte Carlo experiments with confidence intervals.

Each experiment is a deterministic function of (configuration, master seed,
replica count): replica k always consumes the stream keyed by
(master seed, experiment id, k), so the number of parallel workers changes
wall time only, never results.  Probability estimates always land in [0,1]
and every report echoes its configuration so a verdict can be audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import engine, environment, theory
from .environment import CookieEnvironment, RegimeTag
from .stats import EstimateWithCI, ks_critical_value, ks_pvalue, ks_statistic
from .theory import Prediction

__all__ = [
    "ExperimentReport",
    "estimate_h_n",
    "lln_experiment",
    "TransientEstimate",
    "estimate_p_transient",
    "KsReport",
    "clt_check",
    "SaDiagnostics",
    "sa_diagnostics",
    "DominanceReport",
    "dominance_check",
    "SweepRow",
    "sweep",
    "round_toward_zero",
]

DEFAULT_SLACK_C = 5.0
DEFAULT_ESCAPE_RADIUS = 1000
PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


def round_toward_zero(u: float) -> int:
    """The integer of smallest absolute value at distance < 1 from u."""
    return math.trunc(u)


def _se(estimate: EstimateWithCI) -> float:
    return 0.0 if math.isnan(estimate.stderr) else estimate.stderr


@dataclass(frozen=True)
class ExperimentReport:
    predicted: Prediction
    observed: EstimateWithCI
    verdict: str
    config: dict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "predicted": self.predicted.to_dict(),
            "observed": self.observed.to_dict(),
            "verdict": self.verdict,
            "config": self.config,
            "details": self.details,
        }


def estimate_h_n(
    env: CookieEnvironment,
    n: int,
    x: float,
    replicas: int,
    master_seed: int,
    workers: int = 1,
    honest: bool = False,
) -> EstimateWithCI:
    """Fraction of fresh walks hitting [(n+2)x] before [(n+2)(x-1)].

    Targets are rounded toward zero.  When the right target rounds to 0 the
    walk already starts there and the estimate is exactly 1 without
    simulation; symmetrically 0 on the left.
    """
    environment.ensure_valid(env)
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if n < 0:
        raise ValueError("n must be nonnegative")
    right = round_toward_zero((n + 2) * x)
    left = round_toward_zero((n + 2) * (x - 1.0))
    if right == 0:
        return EstimateWithCI.exact(1.0, replicas)
    if left == 0:
        return EstimateWithCI.exact(0.0, replicas)
    sides = engine.sample_exit_sides(
        env, right, left, replicas, master_seed, f"hn:{n}:{x!r}", honest=honest, workers=workers
    )
    return EstimateWithCI.from_indicators(int(sides.sum()), replicas)


def lln_experiment(
    env: CookieEnvironment,
    n_steps: int,
    replicas: int,
    master_seed: int,
    slack_c: float = DEFAULT_SLACK_C,
    workers: int = 1,
) -> ExperimentReport:
    """Compare the mean terminal boundary fraction against the predicted limit.

    Almost-sure convergence comes with no usable rate, so the verdict allows
    an explicit engineering slack of ``slack_c / sqrt(n_steps)`` on top of
    three standard errors; the slack is echoed in the report.  Environments
    whose limit has no formula here yield an ``inconclusive`` verdict with
    the estimate only.
    """
    environment.ensure_valid(env, require_hypothesis=True)
    xs = engine.idla_final_x(env, n_steps, replicas, master_seed, "lln", workers=workers)
    observed = EstimateWithCI.from_samples(xs)
    predicted = theory.predict(env)
    slack = slack_c / math.sqrt(n_steps)
    config = {
        "experiment": "lln",
        "env": env.to_dict(),
        "n_steps": n_steps,
        "replicas": replicas,
        "master_seed": master_seed,
        "slack_c": slack_c,
    }
    details = {"slack": slack, "x_values": [float(v) for v in xs]}
    if predicted.p is None:
        verdict = INCONCLUSIVE
    else:
        gap = abs(observed.mean - predicted.p)
        tol = 3.0 * (observed.stderr if observed.replicas > 1 else 0.0) + slack
        details["gap"] = gap
        details["tolerance"] = tol
        verdict = PASS if gap <= tol else FAIL
    return ExperimentReport(predicted, observed, verdict, config, details)


@dataclass(frozen=True)
class TransientEstimate:
    """Escape-direction estimate at a finite radius, with a 2R consistency probe."""

    at_radius: EstimateWithCI
    at_double_radius: EstimateWithCI
    escape_radius: int
    consistent: bool

    @property
    def estimate(self) -> EstimateWithCI:
        # the larger radius carries the smaller finite-size bias
        return self.at_double_radius

    def to_dict(self) -> dict:
        return {
            "escape_radius": self.escape_radius,
            "at_radius": self.at_radius.to_dict(),
            "at_double_radius": self.at_double_radius.to_dict(),
            "consistent": self.consistent,
        }


def estimate_p_transient(
    env: CookieEnvironment,
    replicas: int,
    escape_radius: int = DEFAULT_ESCAPE_RADIUS,
    master_seed: int = 0,
    workers: int = 1,
) -> TransientEstimate:
    """Fraction of fresh walks reaching +R before -R, at R and 2R.

    This is a finite-radius proxy for the probability of escaping to
    +infinity; the bias vanishes as R grows, so disagreement beyond three
    joint standard errors between R and 2R is flagged as inconsistent.
    Recurrent environments are rejected: there the proxy estimates nothing.
    """
    regime = environment.classify(env)
    if regime.tag not in (
        RegimeTag.TRANSIENT_RIGHT,
        RegimeTag.TRANSIENT_LEFT,
        RegimeTag.TRANSIENT_BOTH,
    ):
        raise ValueError(f"environment is not transient (regime {regime.tag.value})")
    if escape_radius < 100:
        raise ValueError("escape_radius must be at least 100")
    estimates = []
    for radius in (escape_radius, 2 * escape_radius):
        sides = engine.sample_exit_sides(
            env, radius, -radius, replicas, master_seed, f"transient:{radius}", workers=workers
        )
        estimates.append(EstimateWithCI.from_indicators(int(sides.sum()), replicas))
    joint = math.hypot(_se(estimates[0]), _se(estimates[1]))
    consistent = abs(estimates[0].mean - estimates[1].mean) <= 3.0 * joint
    return TransientEstimate(estimates[0], estimates[1], escape_radius, consistent)


@dataclass(frozen=True)
class KsReport:
    statistic: float
    critical_value: float
    pvalue: float
    n_walk: int
    n_pbm: int
    walk_mean: float
    pbm_mean: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "pvalue": self.pvalue,
            "n_walk": self.n_walk,
            "n_pbm": self.n_pbm,
            "walk_mean": self.walk_mean,
            "pbm_mean": self.pbm_mean,
            "passed": self.passed,
        }


def clt_check(
    env: CookieEnvironment,
    n: int,
    replicas: int,
    dt: float,
    master_seed: int,
    level: float = 0.01,
    workers: int = 1,
) -> KsReport:
    """Two-sample KS test: walk positions X_n/sqrt(n) against PBM values Y_1.

    Only meaningful in the diffusive regime (both drifts below 1), where the
    scaled walk converges to the perturbed BM with the environment's drift
    pair; other regimes are rejected.
    """
    regime = environment.classify(env)
    if regime.tag is not RegimeTag.FIXED_POINT:
        raise ValueError(f"scaling comparison requires alpha < 1 and beta < 1 (regime {regime.tag.value})")
    positions = engine.final_positions(env, n, replicas, master_seed, f"clt-walk:{n}", workers=workers)
    scaled = positions / math.sqrt(n)
    pbm_vals = engine.pbm_final_values(
        regime.alpha, regime.beta, 1.0, dt, replicas, master_seed, "clt-pbm", workers=workers
    )
    d_stat = ks_statistic(scaled, pbm_vals)
    crit = ks_critical_value(len(scaled), len(pbm_vals), level)
    return KsReport(
        statistic=d_stat,
        critical_value=crit,
        pvalue=ks_pvalue(d_stat, len(scaled), len(pbm_vals)),
        n_walk=len(scaled),
        n_pbm=len(pbm_vals),
        walk_mean=float(np.mean(scaled)),
        pbm_mean=float(np.mean(pbm_vals)),
        passed=d_stat < crit,
    )


@dataclass(frozen=True)
class SaDiagnostics:
    """Centered-increment diagnostics along one cluster trajectory.

    ``epsilons[k]`` is the exit indicator at sampled step ``ns[k]`` minus an
    estimate of its conditional mean; for a mean-zero increment sequence the
    running average must shrink like 1/sqrt(sample count).
    """

    ns: list[int]
    epsilons: list[float]
    running_mean: float
    bound: float
    within_bound: bool
    aux_walks: int

    def to_dict(self) -> dict:
        return {
            "sampled_steps": self.ns,
            "epsilons": self.epsilons,
            "running_mean": self.running_mean,
            "bound": self.bound,
            "within_bound": self.within_bound,
            "aux_walks": self.aux_walks,
        }


def sa_diagnostics(
    env: CookieEnvironment,
    n_steps: int,
    master_seed: int,
    aux_walks: int = 200,
    sample_every: Optional[int] = None,
    workers: int = 1,
) -> SaDiagnostics:
    """Check that boundary-update noise is centered along one trajectory.

    At each sampled cluster step the conditional exit probability is
    estimated with ``aux_walks`` auxiliary excursions (or taken exactly as
    1 - x_n for the cookie-free environment, where gambler's ruin gives it
    in closed form).  The bound is 3/sqrt(samples) plus the auxiliary
    estimator's own noise allowance.
    """
    environment.ensure_valid(env)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if sample_every is None:
        sample_every = max(1, n_steps // 500)
    d_path = engine.idla_path(env, n_steps, master_seed, "sa-trajectory")
    fair = not env.pos_cookies and not env.neg_cookies
    ns = []
    eps = []
    for n in range(0, n_steps, sample_every):
        d = int(d_path[n])
        right = d + 1
        left = d - n - 1
        x_n = (d + 1) / (n + 2)
        exited_right = 1.0 if d_path[n + 1] > d_path[n] else 0.0
        if fair:
            h_hat = 1.0 - x_n
        else:
            sides = engine.sample_exit_sides(
                env, right, left, aux_walks, master_seed, f"sa-aux:{n}", workers=workers
            )
            h_hat = float(sides.mean())
        ns.append(n)
        eps.append(exited_right - h_hat)
    samples = len(eps)
    running_mean = float(np.mean(eps)) if samples else 0.0
    aux_noise = 0.0 if fair else 3.0 / (2.0 * math.sqrt(aux_walks * samples))
    bound = 3.0 / math.sqrt(samples) + aux_noise if samples else 0.0
    return SaDiagnostics(
        ns=ns,
        epsilons=[float(e) for e in eps],
        running_mean=running_mean,
        bound=bound,
        within_bound=(samples <= 1) or abs(running_mean) <= bound,
        aux_walks=aux_walks,
    )


@dataclass(frozen=True)
class DominanceReport:
    high: EstimateWithCI
    low: EstimateWithCI
    passed: bool

    def to_dict(self) -> dict:
        return {"high": self.high.to_dict(), "low": self.low.to_dict(), "passed": self.passed}


def _dominates(env_hi: CookieEnvironment, env_lo: CookieEnvironment) -> bool:
    for hi_stack, lo_stack in (
        (env_hi.pos_cookies, env_lo.pos_cookies),
        (env_hi.neg_cookies, env_lo.neg_cookies),
    ):
        depth = max(len(hi_stack), len(lo_stack))
        for i in range(depth):
            hi = hi_stack[i] if i < len(hi_stack) else 0.5
            lo = lo_stack[i] if i < len(lo_stack) else 0.5
            if hi < lo:
                return False
    return True


def dominance_check(
    env_hi: CookieEnvironment,
    env_lo: CookieEnvironment,
    n: int,
    x: float,
    replicas: int,
    master_seed: int,
    workers: int = 1,
) -> DominanceReport:
    """Coordinatewise-larger cookies must not lower the right-exit probability."""
    if not _dominates(env_hi, env_lo):
        raise ValueError("env_hi must dominate env_lo cookie by cookie on both sides")
    high = estimate_h_n(env_hi, n, x, replicas, master_seed, workers=workers)
    low = estimate_h_n(env_lo, n, x, replicas, master_seed, workers=workers)
    joint = math.hypot(_se(high), _se(low))
    passed = high.mean >= low.mean - 3.0 * joint
    return DominanceReport(high=high, low=low, passed=passed)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    beta: float
    p_theory: Optional[float]
    x_mean: float
    x_stderr: float
    replicas: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "p_theory": self.p_theory,
            "x_mean": self.x_mean,
            "x_stderr": self.x_stderr,
            "replicas": self.replicas,
        }


def sweep(
    alphas: Sequence[float],
    betas: Sequence[float],
    n_steps: int,
    replicas: int,
    master_seed: int,
    workers: int = 1,
) -> list[SweepRow]:
    """Limit surface data over a drift grid realized by even-split stacks."""
    rows = []
    for a in alphas:
        for b in betas:
            env = environment.from_drifts(a, b)
            prediction = theory.predict(env)
            xs = engine.idla_final_x(
                env, n_steps, replicas, master_seed, f"sweep:{a!r}:{b!r}", workers=workers
            )
            est = EstimateWithCI.from_samples(xs)
            rows.append(
                SweepRow(
                    alpha=a,
                    beta=b,
                    p_theory=prediction.p,
                    x_mean=est.mean,
                    x_stderr=est.stderr if est.replicas > 1 else 0.0,
                    replicas=replicas,
                )
            )
    return rows
