"""One-dimensional internal DLA driven by multi-excited (cookie) random walks.

Simulates the growing cluster boundary, evaluates the analytic limit of its
normalized position, simulates the perturbed Brownian motion that arises as
the walk's scaling limit, and verifies the limit law by seeded Monte Carlo
experiments in every drift regime.
"""

from .environment import (
    CookieEnvironment,
    Regime,
    RegimeTag,
    ValidationReport,
    alpha,
    beta,
    classify,
    from_drifts,
    is_mirror_symmetric,
    mirror,
    validate,
)
from .errors import (
    CookieIdlaError,
    DegenerateBarrier,
    HypothesisViolation,
    MaxStepsExceeded,
    TimeBudgetExceeded,
)
from .idla import Cluster, TrajectoryPoint, advance, run_trajectory, x_value
from .pbm import Hit, PbmState, estimate_h_mc, pbm_step, simulate_until_two_sided_exit
from .stats import EstimateWithCI
from .theory import Prediction, PredictionKind, fixed_point, h_exact, predict
from .walk import ExitSide, Side, WalkState, run_until_exit, step, step_prob

__version__ = "0.1.0"

__all__ = [
    "CookieEnvironment",
    "Regime",
    "RegimeTag",
    "ValidationReport",
    "alpha",
    "beta",
    "classify",
    "from_drifts",
    "is_mirror_symmetric",
    "mirror",
    "validate",
    "CookieIdlaError",
    "DegenerateBarrier",
    "HypothesisViolation",
    "MaxStepsExceeded",
    "TimeBudgetExceeded",
    "Cluster",
    "TrajectoryPoint",
    "advance",
    "run_trajectory",
    "x_value",
    "Hit",
    "PbmState",
    "estimate_h_mc",
    "pbm_step",
    "simulate_until_two_sided_exit",
    "EstimateWithCI",
    "Prediction",
    "PredictionKind",
    "fixed_point",
    "h_exact",
    "predict",
    "ExitSide",
    "Side",
    "WalkState",
    "run_until_exit",
    "step",
    "step_prob",
    "__version__",
]
