"""Metric formulas against hand values, quadratic oracles, and invariants."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantdesk import metrics

import oracles

TOL = 1e-9


class TestCumulativeReturn:
    def test_gain(self):
        assert metrics.cumulative_return([100_000, 126_000]) == pytest.approx(26.0, abs=TOL)

    def test_flat(self):
        assert metrics.cumulative_return([5, 5, 5]) == pytest.approx(0.0, abs=TOL)

    def test_loss(self):
        assert metrics.cumulative_return([100_000, 90_000, 80_000]) == pytest.approx(-20.0, abs=TOL)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            metrics.cumulative_return([100.0])


class TestAnnualizedReturn:
    def test_two_year_square_root(self):
        curve = [100.0] * 1
        curve = [100.0] + [100.0] * 503 + [121.0]
        assert len(curve) == 505
        assert metrics.annualized_return(curve) == pytest.approx(10.0, abs=1e-9)

    def test_flat_ratio_zero(self):
        assert metrics.annualized_return([7.0] * 100) == pytest.approx(0.0, abs=TOL)

    def test_quarter_against_log_oracle(self):
        # 63 daily steps (64 points) with total ratio 1.0575 compounds to one quarter
        curve = list(np.geomspace(100.0, 105.75, num=64))
        ar = metrics.annualized_return(curve)
        assert ar == pytest.approx(oracles.oracle_annualized_log(curve), abs=TOL)
        assert ar == pytest.approx((1.0575 ** 4 - 1) * 100.0, rel=1e-12)

    def test_nonpositive_start_rejected(self):
        with pytest.raises(ValueError):
            metrics.annualized_return([0.0, 10.0])


class TestSharpe:
    def test_alternating_mean_zero(self):
        curve = [100.0]
        for r in (0.01, -0.01, 0.01, -0.01):
            curve.append(curve[-1] * (1 + r))
        raw, annualized = metrics.sharpe_ratio(curve, rf_annual=0.0)
        assert raw == pytest.approx(0.0, abs=TOL)
        assert annualized == pytest.approx(0.0, abs=TOL)

    def test_constant_return_zero_volatility(self):
        # powers of two give exactly constant daily returns in floating point
        curve = [100.0 * 2.0**i for i in range(10)]
        with pytest.raises(metrics.ZeroVolatilityError):
            metrics.sharpe_ratio(curve)
        with pytest.raises(metrics.ZeroVolatilityError):
            metrics.sharpe_ratio([50.0] * 10)

    def test_random_walk_against_oracle(self):
        rng = np.random.default_rng(42)
        curve = list(100_000 * np.exp(np.cumsum(rng.normal(0.0005, 0.01, size=60))))
        raw, annualized = metrics.sharpe_ratio(curve, rf_annual=0.04)
        oraw, oann = oracles.oracle_sharpe(curve, rf_annual=0.04)
        assert raw == pytest.approx(oraw, abs=TOL)
        assert annualized == pytest.approx(oann, abs=TOL)

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            metrics.sharpe_ratio([100.0, 101.0])


class TestMaxDrawdown:
    def test_hand_example(self):
        assert metrics.max_drawdown([100, 120, 90, 110]) == pytest.approx(25.0, abs=TOL)

    def test_monotone_increasing_zero(self):
        assert metrics.max_drawdown(list(range(1, 50))) == pytest.approx(0.0, abs=TOL)

    def test_streaming_equals_quadratic_oracle(self):
        rng = np.random.default_rng(7)
        curve = list(100.0 * np.exp(np.cumsum(rng.normal(0, 0.02, size=250))))
        assert metrics.max_drawdown(curve) == pytest.approx(
            oracles.oracle_max_drawdown_quadratic(curve), abs=TOL
        )

    def test_bounds_for_positive_curves(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            curve = list(np.exp(np.cumsum(rng.normal(0, 0.05, size=100))))
            mdd = metrics.max_drawdown(curve)
            assert 0.0 <= mdd < 100.0


class TestReport:
    def test_fields_and_consistency(self):
        rng = np.random.default_rng(5)
        curve = list(100_000 * np.exp(np.cumsum(rng.normal(0.0004, 0.01, size=80))))
        report = metrics.compute_report(curve, rf_annual=0.02)
        d = report.to_dict()
        assert set(d) == {
            "cumulative_return_pct",
            "annualized_return_pct",
            "sharpe_ratio",
            "sharpe_annualized",
            "max_drawdown_pct",
            "n_years",
            "risk_free_rate_annual",
        }
        assert d["n_years"] == pytest.approx(79 / 252)
        assert d["risk_free_rate_annual"] == 0.02

    def test_flat_curve_sharpe_is_none(self):
        report = metrics.compute_report([100.0] * 10)
        assert report.sharpe_ratio is None and report.sharpe_annualized is None
        assert report.cumulative_return_pct == 0.0

    def test_cr_ar_agree_over_one_trading_year(self):
        # over exactly 252 daily steps the annualization exponent is 1
        rng = np.random.default_rng(9)
        curve = list(100_000 * np.exp(np.cumsum(rng.normal(0.0003, 0.01, size=253))))
        curve = [100_000.0] + curve[1:]
        report = metrics.compute_report(curve)
        growth_cr = 1 + report.cumulative_return_pct / 100
        growth_ar = 1 + report.annualized_return_pct / 100
        assert growth_cr == pytest.approx(growth_ar, abs=TOL)


class TestScaleInvariance:
    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=3, max_value=200),
        st.integers(min_value=0, max_value=10_000),
        st.sampled_from([1e-3, 0.5, 3.0, 1000.0]),
    )
    def test_all_metrics_scale_invariant(self, n, seed, k):
        rng = np.random.default_rng(seed)
        curve = 100_000 * np.exp(np.cumsum(rng.normal(0.0002, 0.01, size=n)))
        base = metrics.compute_report(list(curve))
        scaled = metrics.compute_report(list(curve * k))
        assert scaled.cumulative_return_pct == pytest.approx(base.cumulative_return_pct, abs=1e-7)
        assert scaled.annualized_return_pct == pytest.approx(base.annualized_return_pct, abs=1e-7)
        assert scaled.max_drawdown_pct == pytest.approx(base.max_drawdown_pct, abs=1e-7)
        if base.sharpe_ratio is not None:
            assert scaled.sharpe_ratio == pytest.approx(base.sharpe_ratio, abs=1e-7)
