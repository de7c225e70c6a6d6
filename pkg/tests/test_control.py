import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from edmcontrol.control import (
    CONTROL_EMBEDDING,
    ControllerParams,
    EdmController,
    LoopConfig,
    closed_loop_controller,
    make_legitimacy_schedule,
    propaganda_response,
)
from edmcontrol.timeseries import Frame

PAPER = ControllerParams()  # p_min 0.06, p_max 0.6, slope 0.05, midpoint 50


class TestPropagandaResponse:
    def test_midpoint_is_exact(self):
        assert propaganda_response(50.0, PAPER) == 0.33

    def test_saturation_at_large_forecast(self):
        assert propaganda_response(1000.0, PAPER) == pytest.approx(0.6, abs=1e-9)

    def test_zero_forecast_value(self):
        # direct numeric evaluation of the logistic with the default constants
        expected = 0.54 / (1.0 + math.exp(0.05 * 50.0)) + 0.06
        assert propaganda_response(0.0, PAPER) == pytest.approx(expected, abs=1e-15)
        assert propaganda_response(0.0, PAPER) == pytest.approx(0.1010, abs=5e-4)

    @given(a=st.floats(-1e4, 1e4))
    @settings(max_examples=100, deadline=None)
    def test_bounded_open_interval(self, a):
        p = propaganda_response(a, PAPER)
        assert PAPER.p_min < p < PAPER.p_max

    @given(a=st.floats(-50, 400), delta=st.floats(0.01, 100))
    @settings(max_examples=100, deadline=None)
    def test_strictly_increasing(self, a, delta):
        # strict over the operational forecast range, for separations that
        # are resolvable in double precision (the far tails saturate)
        assert propaganda_response(a, PAPER) < propaganda_response(a + delta, PAPER)

    @given(a=st.floats(-1e6, 1e6), b=st.floats(-1e6, 1e6))
    @settings(max_examples=60, deadline=None)
    def test_monotone_everywhere(self, a, b):
        if a > b:
            a, b = b, a
        assert propaganda_response(a, PAPER) <= propaganda_response(b, PAPER)

    def test_rejects_nonfinite_forecast(self):
        with pytest.raises(ValueError, match="finite"):
            propaganda_response(math.nan, PAPER)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            ControllerParams(p_min=0.5, p_max=0.5)
        with pytest.raises(ValueError):
            ControllerParams(slope=0.0)


class TestLegitimacySchedule:
    def test_values_within_half_open_interval(self):
        for seed in range(30):
            s = make_legitimacy_schedule(seed, 2000)
            assert np.all(s.values > 0.6)
            assert np.all(s.values <= 0.85)

    def test_same_seed_identical(self):
        a = make_legitimacy_schedule(42, 1500)
        b = make_legitimacy_schedule(42, 1500)
        assert np.array_equal(a.change_times, b.change_times)
        assert np.array_equal(a.values, b.values)

    def test_twenty_change_points_sorted_in_open_interval(self):
        s = make_legitimacy_schedule(7, 3000)
        assert len(s.change_times) == 20
        assert np.all(np.diff(s.change_times) > 0)
        assert s.change_times[0] > 0
        assert s.change_times[-1] < 3000

    def test_materialize_matches_value_at(self):
        s = make_legitimacy_schedule(3, 500)
        arr = s.materialize(500)
        for t in (1, 100, 250, 499, 500):
            assert arr[t - 1] == s.value_at(t)

    def test_segment_values_uniform(self):
        # pooled segment values across many schedules: KS against U(0.6, 0.85)
        vals = np.concatenate(
            [make_legitimacy_schedule(s, 1000).values for s in range(200)]
        )
        stat, p = stats.kstest(vals, "uniform", args=(0.6, 0.25))
        assert p > 0.01

    def test_shifted(self):
        s = make_legitimacy_schedule(1, 100)
        t = s.shifted(50)
        assert np.array_equal(t.change_times, s.change_times + 50)


def constant_history(n, active=30.0, jailed=200.0, propaganda=0.1):
    quiet = 1120.0 - active - jailed
    return Frame(
        np.arange(1, n + 1),
        {
            "quiet": np.full(n, quiet),
            "active": np.full(n, active),
            "jailed": np.full(n, jailed),
            "legitimacy": np.full(n, 0.82),
            "propaganda": np.full(n, propaganda),
        },
    )


class TestClosedLoop:
    CFG = LoopConfig(warmup_ticks=40)

    def test_warmup_passes_initial_propaganda_through(self):
        hist = constant_history(10, propaganda=0.17)
        d = closed_loop_controller(hist, self.CFG, PAPER)
        assert d.propaganda == 0.17
        assert not d.engaged
        assert math.isnan(d.forecast)

    def test_constant_history_forecasts_the_constant(self):
        hist = constant_history(60, active=35.0)
        d = closed_loop_controller(hist, self.CFG, PAPER)
        assert d.engaged
        assert d.forecast == pytest.approx(35.0, abs=1e-9)
        assert d.propaganda == pytest.approx(propaganda_response(35.0, PAPER), abs=1e-12)

    def test_varying_history_engages_smap(self):
        rng = np.random.default_rng(0)
        n = 80
        active = 30 + 10 * np.sin(np.arange(n) / 5) + rng.normal(size=n)
        jailed = 100 + np.cumsum(rng.normal(size=n))
        hist = Frame(
            np.arange(1, n + 1),
            {
                "quiet": 1120 - active - jailed,
                "active": active,
                "jailed": jailed,
                "legitimacy": np.full(n, 0.8),
                "propaganda": np.full(n, 0.1),
            },
        )
        d = closed_loop_controller(hist, self.CFG, PAPER)
        assert d.engaged and math.isfinite(d.forecast)
        assert PAPER.p_min < d.propaganda < PAPER.p_max

    def test_no_lookahead_library_targets_are_observed(self):
        # every library row's target time must lie at or before the current
        # tick, and the decision is a pure function of the history prefix
        from edmcontrol.timeseries import build_generalized_embedding

        hist = constant_history(60, active=25.0)
        emb = build_generalized_embedding(hist, CONTROL_EMBEDDING)
        assert emb.times.max() + CONTROL_EMBEDDING.tp <= hist.time[-1]
        a = closed_loop_controller(hist, self.CFG, PAPER)
        b = closed_loop_controller(hist, self.CFG, PAPER)
        assert a == b

    def test_loop_config_floor(self):
        with pytest.raises(ValueError, match="minimum"):
            LoopConfig(warmup_ticks=5)

    def test_edm_controller_callable(self):
        ctl = EdmController(self.CFG, PAPER)
        hist = constant_history(60, active=35.0)
        d = ctl(hist)
        assert d.engaged
        assert d.propaganda == pytest.approx(propaganda_response(35.0, PAPER), abs=1e-12)
