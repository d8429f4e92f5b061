import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cookie_idla import engine
from cookie_idla.errors import TimeBudgetExceeded
from cookie_idla.pbm import (
    Hit,
    PbmState,
    estimate_h_mc,
    pbm_step,
    sample_path,
    simulate_until_two_sided_exit,
)
from cookie_idla.theory import h_exact


class TestPbmStep:
    def test_new_maximum_solved_implicitly(self):
        state = pbm_step(PbmState(), 0.1, alpha=0.5, beta=0.0)
        assert state.y == pytest.approx(0.2)
        assert state.m == pytest.approx(0.2)
        assert state.i == 0.0

    def test_new_minimum_mirrors(self):
        state = pbm_step(PbmState(), -0.1, alpha=0.0, beta=0.5)
        assert state.y == pytest.approx(-0.2)
        assert state.i == pytest.approx(-0.2)
        assert state.m == 0.0

    def test_degenerate_is_brownian(self, rng):
        state = PbmState()
        b = 0.0
        for _ in range(500):
            db = rng.standard_normal() * 0.01
            b += db
            state = pbm_step(state, db, 0.0, 0.0)
            assert state.y == b  # bitwise: the path IS the driving noise
        assert state.m == pytest.approx(max(0.0, state.m))

    def test_rejects_supercritical(self):
        with pytest.raises(ValueError):
            pbm_step(PbmState(), 0.1, alpha=1.0, beta=0.0)
        with pytest.raises(ValueError):
            pbm_step(PbmState(), 0.1, alpha=0.0, beta=1.5)

    def test_rejects_corrupt_state(self):
        bad = PbmState(t=0.0, y=0.0, b=0.0, m=-1.0, i=1.0)
        with pytest.raises(ValueError):
            pbm_step(bad, 0.1, 0.2, 0.2)

    @given(
        st.floats(min_value=-0.9, max_value=0.9),
        st.floats(min_value=-0.9, max_value=0.9),
        st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=60, deadline=None)
    def test_invariants_along_path(self, alpha, beta, seed):
        rng = np.random.default_rng(seed)
        state = PbmState()
        for _ in range(200):
            prev = state
            state = pbm_step(state, 0.05 * rng.standard_normal(), alpha, beta, dt=1e-3)
            assert state.i <= state.y <= state.m
            assert state.m >= prev.m
            assert state.i <= prev.i
            residual = state.y - (state.b + alpha * state.m + beta * state.i)
            assert abs(residual) <= 1e-9


class TestRecordedPathKernel:
    def test_matches_python_steps(self, rng):
        alpha, beta = 0.6, -0.8
        db = rng.standard_normal(2000) * 0.01
        y, b, m, i = engine.pbm_recorded_path(alpha, beta, db)
        state = PbmState()
        for k in range(len(db)):
            state = pbm_step(state, db[k], alpha, beta)
            assert y[k] == pytest.approx(state.y, abs=1e-12)
            assert m[k] == pytest.approx(state.m, abs=1e-12)
            assert i[k] == pytest.approx(state.i, abs=1e-12)
        assert b[-1] == pytest.approx(state.b, abs=1e-12)


class TestTwoSidedExit:
    def test_brownian_symmetric(self, rng):
        n = 2000
        ups = sum(
            simulate_until_two_sided_exit(0.0, 0.0, 0.5, dt=1e-3, rng=rng) is Hit.UPPER
            for _ in range(n)
        )
        assert abs(ups / n - 0.5) < 3.0 * 0.5 / math.sqrt(n)

    def test_rejects_bad_level(self, rng):
        with pytest.raises(ValueError):
            simulate_until_two_sided_exit(0.0, 0.0, 1.5, rng=rng)

    def test_time_budget(self, rng):
        with pytest.raises(TimeBudgetExceeded):
            simulate_until_two_sided_exit(0.0, 0.0, 0.5, dt=1e-4, rng=rng, t_max=1e-3)


class TestEstimateHMc:
    def test_brownian_level(self):
        est = estimate_h_mc(0.0, 0.0, 0.3, dt=1e-3, replicas=4000, master_seed=11)
        # true value 0.7 plus O(sqrt(dt)) grid bias
        assert abs(est.mean - 0.7) < 3.0 * est.stderr + 4.0 * math.sqrt(1e-3)

    def test_brownian_symmetric_level(self):
        est = estimate_h_mc(0.0, 0.0, 0.5, dt=1e-4, replicas=10_000, master_seed=11)
        assert abs(est.mean - 0.5) < 3.0 * est.stderr + 4.0 * math.sqrt(1e-4)

    def test_single_replica_degenerate(self):
        est = estimate_h_mc(0.0, 0.0, 0.5, dt=1e-3, replicas=1, master_seed=3)
        assert est.mean in (0.0, 1.0)
        assert math.isnan(est.stderr)

    def test_deterministic_and_worker_invariant(self):
        a = estimate_h_mc(0.3, 0.1, 0.4, dt=1e-3, replicas=600, master_seed=5)
        b = estimate_h_mc(0.3, 0.1, 0.4, dt=1e-3, replicas=600, master_seed=5)
        c = estimate_h_mc(0.3, 0.1, 0.4, dt=1e-3, replicas=600, master_seed=5, workers=2)
        assert a == b == c

    def test_cross_oracle_against_beta_formula(self):
        # the golden-section level for drift pair (0.5, 0)
        x = (math.sqrt(5.0) - 1.0) / 2.0
        est = estimate_h_mc(0.5, 0.0, x, dt=2e-4, replicas=8000, master_seed=17)
        target = h_exact(0.5, 0.0, x)
        assert abs(est.mean - target) < 3.0 * est.stderr + 4.0 * math.sqrt(2e-4)

    def test_grid_bias_shrinks_with_dt(self):
        # Brownian case against the exact ruin value 1 - x: the first-crossing
        # rule underestimates excursions, so the gap shrinks as dt does
        x = 0.3
        gaps = []
        for dt in (4e-3, 1e-3, 2.5e-4):
            est = estimate_h_mc(0.0, 0.0, x, dt=dt, replicas=20000, master_seed=23)
            gaps.append(abs(est.mean - (1.0 - x)))
        assert gaps[0] > gaps[-1]


def test_sample_path_records_grid(rng):
    path = sample_path(0.2, 0.1, t_end=0.05, dt=1e-3, rng=rng)
    assert len(path) == 51
    assert path[0] == PbmState()
    assert path[-1].t == pytest.approx(0.05)
