"""Law-level validation of the compiled kernels.

The skeleton sampler, the honest stepper, the pure-Python twin, and the
exact finite-state oracle are four independent routes to the same exit
law; these tests pin them against each other.
"""

import numpy as np
import pytest

from cookie_idla import engine, rng
from cookie_idla.environment import CookieEnvironment
from cookie_idla.errors import MaxStepsExceeded
from oracles import exact_exit_prob, exact_position_pmf

ENV_CASES = [
    # (pos, neg, right, left): spanning fair, single- and double-cookie,
    # one-sided, negative-drift, and asymmetric stacks
    ((), (), 3, -7),
    ((0.75,), (0.25,), 3, -3),
    ((0.75,), (), 4, -3),
    ((0.75, 0.75), (), 3, -3),
    ((0.75, 0.75), (0.25, 0.25), 2, -4),
    ((0.3,), (0.8,), 3, -2),
    ((0.6, 0.7), (0.45,), 3, -3),
    ((0.9, 0.9), (0.1, 0.1), 4, -4),
]


def _freq(sides):
    return float(np.asarray(sides).mean())


def _tol(p, n, k=4.5):
    return k * max(np.sqrt(p * (1.0 - p) / n), 1e-6)


class TestSkeletonAgainstOracle:
    @pytest.mark.parametrize("pos,neg,right,left", ENV_CASES)
    def test_exit_frequency(self, pos, neg, right, left):
        exact = exact_exit_prob(pos, neg, right, left)
        env = CookieEnvironment(pos, neg)
        n = 60_000
        freq = _freq(engine.sample_exit_sides(env, right, left, n, 314, "sk-oracle"))
        assert abs(freq - exact) < _tol(exact, n)

    def test_high_precision_two_sided(self):
        # one tight pin at 300k replicas on the hardest (two-cookie) case
        pos, neg = (0.75, 0.75), (0.25, 0.25)
        exact = exact_exit_prob(pos, neg, 3, -2)
        env = CookieEnvironment(pos, neg)
        n = 300_000
        freq = _freq(engine.sample_exit_sides(env, 3, -2, n, 2718, "sk-tight"))
        assert abs(freq - exact) < _tol(exact, n)


class TestHonestAgainstOracle:
    @pytest.mark.parametrize("pos,neg,right,left", ENV_CASES)
    def test_exit_frequency(self, pos, neg, right, left):
        exact = exact_exit_prob(pos, neg, right, left)
        env = CookieEnvironment(pos, neg)
        n = 60_000
        freq = _freq(
            engine.sample_exit_sides(env, right, left, n, 314, "ho-oracle", honest=True)
        )
        assert abs(freq - exact) < _tol(exact, n)

    def test_step_counts_fair_env(self):
        # mean exit time from (-b, a) for the fair walk is a*b
        env = CookieEnvironment((), ())
        sides, steps = engine.exit_sides_and_steps(env, 5, -4, 40_000, 11, "steps")
        assert steps.mean() == pytest.approx(20.0, rel=0.03)
        assert steps.min() >= 4
        # step parity must match the parity of the exit site
        assert (steps[sides == 1] % 2 == 1).all()
        assert (steps[sides == 0] % 2 == 0).all()


class TestPythonTwin:
    @pytest.mark.parametrize(
        "pos,neg,right,left",
        [((0.75,), (0.25,), 3, -3), ((0.75, 0.75), (), 3, -3), ((), (), 3, -7)],
    )
    def test_twin_matches_oracle(self, pos, neg, right, left):
        exact = exact_exit_prob(pos, neg, right, left)
        stream = np.random.default_rng(5)
        n = 20_000
        hits = sum(
            engine._py_skeleton_exit(pos, neg, right, left, stream, 10**9) for _ in range(n)
        )
        assert abs(hits / n - exact) < _tol(exact, n)


class TestFixedTimeKernel:
    @pytest.mark.parametrize("pos,neg", [((), ()), ((0.75,), (0.25,)), ((0.75, 0.75), ())])
    def test_position_pmf(self, pos, neg):
        n_steps = 7
        pmf = exact_position_pmf(pos, neg, n_steps)
        env = CookieEnvironment(pos, neg)
        n = 60_000
        out = engine.final_positions(env, n_steps, n, 99, "pmf")
        for site, p in pmf.items():
            freq = float((out == site).mean())
            assert abs(freq - p) < _tol(p, n)

    def test_parity(self):
        out = engine.final_positions(CookieEnvironment((), ()), 8, 100, 1, "parity")
        assert (out % 2 == 0).all()
        assert (np.abs(out) <= 8).all()


class TestDeterminism:
    def test_same_seed_same_output(self, sym_half_env):
        a = engine.sample_exit_sides(sym_half_env, 5, -5, 500, 42, "det")
        b = engine.sample_exit_sides(sym_half_env, 5, -5, 500, 42, "det")
        assert (a == b).all()

    def test_worker_count_invariance(self, sym_half_env):
        a = engine.sample_exit_sides(sym_half_env, 5, -5, 501, 42, "det", workers=1)
        b = engine.sample_exit_sides(sym_half_env, 5, -5, 501, 42, "det", workers=2)
        assert (a == b).all()

    def test_replica_prefix_stability(self, sym_half_env):
        # replica k's outcome does not depend on how many replicas run
        a = engine.sample_exit_sides(sym_half_env, 5, -5, 200, 42, "det")
        b = engine.sample_exit_sides(sym_half_env, 5, -5, 350, 42, "det")
        assert (a == b[:200]).all()

    def test_idla_path_deterministic(self, critical_env):
        a = engine.idla_path(critical_env, 400, 9, "det-idla")
        b = engine.idla_path(critical_env, 400, 9, "det-idla")
        assert (a == b).all()

    def test_experiment_id_separates_streams(self, sym_half_env):
        a = engine.sample_exit_sides(sym_half_env, 5, -5, 400, 42, "stream-a")
        b = engine.sample_exit_sides(sym_half_env, 5, -5, 400, 42, "stream-b")
        assert (a != b).any()


class TestTrajectoryCrossValidation:
    def test_skeleton_vs_honest_boundary_env(self, boundary_env):
        # mean terminal x after 300 cluster steps, two independent engines
        n_steps = 300
        xs_skel = engine.idla_final_x(boundary_env, n_steps, 48, 21, "xval-skel")
        xs_honest = []
        for rep in range(16):
            d = 0
            for n in range(n_steps):
                side = engine.sample_exit_sides(
                    boundary_env, d + 1, d - n - 1, 1, 21, f"xval-honest:{rep}:{n}", honest=True
                )
                d += int(side[0])
            xs_honest.append((d + 1) / (n_steps + 2))
        gap = abs(np.mean(xs_skel) - np.mean(xs_honest))
        joint = np.hypot(
            np.std(xs_skel, ddof=1) / np.sqrt(len(xs_skel)),
            np.std(xs_honest, ddof=1) / np.sqrt(len(xs_honest)),
        )
        assert gap < 4.0 * joint

    def test_event_budget_raises(self, sym_half_env):
        with pytest.raises(MaxStepsExceeded):
            engine.sample_exit_sides(sym_half_env, 50, -50, 4, 1, "budget", max_events=3)


class TestKernelRngStreams:
    def test_uniform_moments(self):
        state = rng.kernel_state(123, "moments")
        draws = np.array([engine._u01(state) for _ in range(50_000)])
        assert abs(draws.mean() - 0.5) < 0.01
        assert abs(draws.var() - 1.0 / 12.0) < 0.005
        assert draws.min() >= 0.0 and draws.max() < 1.0

    def test_normal_moments(self):
        state = rng.kernel_state(123, "normals")
        draws = np.array([engine._normal(state) for _ in range(50_000)])
        assert abs(draws.mean()) < 0.02
        assert abs(draws.std() - 1.0) < 0.02


class TestNumbaFreeFallback:
    """The dispatchers must stay functional (if slow) without compiled kernels."""

    @pytest.fixture(autouse=True)
    def _disable_numba(self, monkeypatch):
        monkeypatch.setattr(engine, "HAVE_NUMBA", False)

    def test_exit_sides(self, sym_half_env):
        exact = exact_exit_prob(sym_half_env.pos_cookies, sym_half_env.neg_cookies, 3, -3)
        n = 4000
        freq = _freq(engine.sample_exit_sides(sym_half_env, 3, -3, n, 55, "fb"))
        assert abs(freq - exact) < _tol(exact, n)
        honest = _freq(engine.sample_exit_sides(sym_half_env, 3, -3, n, 55, "fbh", honest=True))
        assert abs(honest - exact) < _tol(exact, n)

    def test_exit_sides_deterministic(self, sym_half_env):
        a = engine.sample_exit_sides(sym_half_env, 3, -3, 200, 55, "fb-det")
        b = engine.sample_exit_sides(sym_half_env, 3, -3, 200, 55, "fb-det")
        assert (a == b).all()

    def test_positions_and_idla(self, fair_env):
        out = engine.final_positions(fair_env, 6, 2000, 9, "fb-pos")
        assert (np.abs(out) <= 6).all() and (out % 2 == 0).all()
        d = engine.idla_path(fair_env, 50, 9, "fb-idla")
        assert d[0] == 0 and (np.diff(d) >= 0).all() and (np.diff(d) <= 1).all()

    def test_pbm_paths(self):
        vals = engine.pbm_final_values(0.2, 0.1, 0.05, 1e-3, 400, 9, "fb-pbm")
        assert np.isfinite(vals).all()
        sides = engine.pbm_exit_sides(0.0, 0.0, 0.5, 1e-3, 100.0, 400, 9, "fb-exit")
        assert abs(sides.mean() - 0.5) < 4.5 * 0.5 / np.sqrt(400)
        y, b, m, i = engine.pbm_recorded_path(0.3, 0.2, np.full(10, 0.1))
        assert ((i <= y) & (y <= m)).all()
