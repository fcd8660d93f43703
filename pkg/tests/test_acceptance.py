"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they pass.
"""

from __future__ import annotations

import csv
import json
import socket
import time
from contextlib import contextmanager
from dataclasses import replace as dc_replace
from datetime import date
import numpy as np
import pytest

from quantdesk import indicators as ind
from quantdesk import metrics
from quantdesk.agents import AgentDecisionSource, AgentsConfig, run_pipeline
from quantdesk.backtest import BacktestConfig, StrategySource, run_backtest
from quantdesk.llm import ScriptedBackend
from quantdesk.marketdata import MarketDataStore
from quantdesk.protocol import Role, state_to_json
from quantdesk.strategies import make_strategy
from quantdesk.tools import default_registry

import oracles
from conftest import (
    PIPELINE_FIXTURE,
    TICKER,
    make_random_walk_bars,
    make_store,
    ohlcv_arrays,
    trading_dates,
)

TOL = 1e-9
STRATEGY_NAMES = ("buy_and_hold", "macd", "kdj_rsi", "zmr", "sma")


def _report(n: int, description: str) -> None:
    print(f"ACCEPTANCE {n:02d} PASS: {description}")


@contextmanager
def _budget(seconds: float):
    t0 = time.monotonic()
    yield
    elapsed = time.monotonic() - t0
    assert elapsed < seconds, f"runtime {elapsed:.2f}s exceeded the {seconds}s budget"


def _signal_sequence(strategy, bars):
    return [strategy.decide(bars[: t + 1], t).value for t in range(len(bars))]


def _perturbed_store(bars, t: date, factor: float) -> MarketDataStore:
    """Store whose bars after `t` are scaled by `factor` (OHLC only)."""
    store = MarketDataStore()
    rows = [
        b
        if b.date <= t
        else dc_replace(
            b,
            open=b.open * factor,
            high=b.high * factor,
            low=b.low * factor,
            close=b.close * factor,
            adj_close=b.adj_close * factor,
        )
        for b in bars
    ]
    store._bars[TICKER] = rows  # direct injection avoids CSV round-trips in the loop
    return store


@pytest.fixture(scope="module")
def demo_store():
    return make_store()


@pytest.fixture(scope="module")
def demo_bars(demo_store):
    return demo_store.bars_as_of(TICKER, date(2030, 1, 1))


def test_criterion_01_metric_formulas():
    with _budget(1.0):
        # direct evaluations of the four formulas on hand curves
        assert metrics.cumulative_return([100_000, 126_000]) == pytest.approx(26.0, abs=TOL)
        assert metrics.cumulative_return([100_000, 80_000]) == pytest.approx(-20.0, abs=TOL)
        assert metrics.cumulative_return([5.0, 5.0]) == pytest.approx(0.0, abs=TOL)

        two_years = [100_000.0] + [100_000.0] * 503 + [121_000.0]
        assert metrics.annualized_return(two_years) == pytest.approx(10.0, abs=TOL)
        assert metrics.annualized_return([7.0] * 100) == pytest.approx(0.0, abs=TOL)
        quarter = list(np.geomspace(100.0, 105.75, num=64))
        assert metrics.annualized_return(quarter) == pytest.approx(
            oracles.oracle_annualized_log(quarter), abs=TOL
        )

        curve = [100.0]
        for r in (0.01, -0.01, 0.01, -0.01):
            curve.append(curve[-1] * (1 + r))
        raw, _ = metrics.sharpe_ratio(curve, rf_annual=0.0)
        assert raw == pytest.approx(0.0, abs=TOL)
        with pytest.raises(metrics.ZeroVolatilityError):
            metrics.sharpe_ratio([100.0 * 2.0**i for i in range(10)])
        rng = np.random.default_rng(404)
        noisy = list(100_000 * np.exp(np.cumsum(rng.normal(0.0005, 0.01, size=60))))
        raw, ann = metrics.sharpe_ratio(noisy, rf_annual=0.04)
        oraw, oann = oracles.oracle_sharpe(noisy, rf_annual=0.04)
        assert raw == pytest.approx(oraw, abs=TOL) and ann == pytest.approx(oann, abs=TOL)

        assert metrics.max_drawdown([100, 120, 90, 110]) == pytest.approx(25.0, abs=TOL)
        assert metrics.max_drawdown(list(range(1, 100))) == pytest.approx(0.0, abs=TOL)

        # streaming MDD equals the quadratic oracle on 100 random 250-point curves
        rng = np.random.default_rng(1001)
        for _ in range(100):
            curve = 100.0 * np.exp(np.cumsum(rng.normal(0.0, 0.02, size=250)))
            assert metrics.max_drawdown(list(curve)) == pytest.approx(
                oracles.oracle_max_drawdown_quadratic_np(curve), abs=TOL
            )
    _report(1, "CR/AR/SR/MDD match direct formula evaluation and the quadratic MDD oracle")


def test_criterion_02_indicator_oracle_suite():
    with _budget(5.0):
        bars = make_random_walk_bars(250, seed=20240102)
        highs, lows, closes, volumes = ohlcv_arrays(bars)

        def check(series, expected):
            assert len(series) == len(expected)
            for a, e in zip(series.values(), expected):
                if e is None:
                    assert a is None
                else:
                    assert a == pytest.approx(e, abs=TOL)

        check(ind.sma(bars, 20), oracles.oracle_sma(closes, 20))
        check(ind.ema(bars, 12), oracles.oracle_ema(closes, 12))
        m, s, h = ind.macd(bars)
        om, os_, oh = oracles.oracle_macd(closes)
        check(m, om), check(s, os_), check(h, oh)
        check(ind.rsi(bars, 14), oracles.oracle_rsi(closes, 14))
        k, d, j = ind.kdj(bars, 9, 3, 3)
        ok, od, oj = oracles.oracle_kdj(highs, lows, closes, 9, 3, 3)
        check(k, ok), check(d, od), check(j, oj)
        bu, bm, bl = ind.bollinger(bars, 20, 2.0)
        obu, obm, obl = oracles.oracle_bollinger(closes, 20, 2.0)
        check(bu, obu), check(bm, obm), check(bl, obl)
        check(ind.atr(bars, 14), oracles.oracle_atr(highs, lows, closes, 14))
        check(ind.adx(bars, 14), oracles.oracle_adx(highs, lows, closes, 14))
        check(ind.cci(bars, 14), oracles.oracle_cci(highs, lows, closes, 14))
        check(ind.vwma(bars, 14), oracles.oracle_vwma(closes, volumes, 14))
        st_series, st_dir = ind.supertrend(bars, 10, 3.0)
        ost, odir = oracles.oracle_supertrend(highs, lows, closes, 10, 3.0)
        check(st_series, ost), check(st_dir, odir)

        # bounds invariants over 1000 random fixtures
        for seed in range(1000):
            small = make_random_walk_bars(40, seed=seed, vol=0.03)
            for v in ind.rsi(small, 14).values():
                if v is not None:
                    assert 0.0 <= v <= 100.0
            upper, middle, lower = ind.bollinger(small, 20, 2.0)
            for u, mid, low in zip(upper.values(), middle.values(), lower.values()):
                if u is not None:
                    assert u >= mid >= low
            kk, dd, _ = ind.kdj(small, 9, 3, 3)
            for v in list(kk.values()) + list(dd.values()):
                if v is not None:
                    assert 0.0 <= v <= 100.0
    _report(2, "all 11 indicators match independent oracles to 1e-9; bounds hold on 1000 fixtures")


def test_criterion_03_baseline_determinism(demo_bars):
    with _budget(1.0):
        highs, lows, closes, _ = ohlcv_arrays(demo_bars)
        oracle_seqs = {
            "buy_and_hold": oracles.oracle_buy_and_hold_signals(len(demo_bars)),
            "macd": oracles.oracle_macd_signals(closes),
            "kdj_rsi": oracles.oracle_kdj_rsi_signals(highs, lows, closes),
            "zmr": oracles.oracle_zmr_signals(closes),
            "sma": oracles.oracle_sma_signals(closes),
        }
        for name in STRATEGY_NAMES:
            first = _signal_sequence(make_strategy(name), demo_bars)
            second = _signal_sequence(make_strategy(name), demo_bars)
            assert first == second, f"{name} not deterministic"
            assert first == oracle_seqs[name], f"{name} deviates from its oracle"
    _report(3, "5 baselines bit-identical across runs and equal to brute-force oracles")


def test_criterion_04_no_lookahead(demo_store, demo_bars, tmp_path):
    with _budget(10.0):
        start, end = demo_store.span(TICKER)
        rng = np.random.default_rng(2024)
        t_indices = sorted(rng.choice(np.arange(30, 249), size=20, replace=False))
        day_list = [b.date for b in demo_bars]

        for name in STRATEGY_NAMES:
            base = run_backtest(StrategySource(make_strategy(name)), TICKER, start, end, demo_store)
            base_trades = base.trades
            for t_index in t_indices:
                t = day_list[t_index]
                factor = 1.0 + float(rng.uniform(0.05, 0.6))
                pstore = _perturbed_store(demo_bars, t, factor)
                perturbed = run_backtest(
                    StrategySource(make_strategy(name)), TICKER, start, t, pstore
                )
                n = t_index + 1
                assert perturbed.equity_curve.points == base.equity_curve.points[:n]
                assert perturbed.trades == [tr for tr in base_trades if tr.date <= t]

        # scripted agent pipeline: perturbing data after each pipeline day leaves
        # every session log at or before that day byte-identical
        config = AgentsConfig(research_rounds=2, risk_rounds=1)
        registry = default_registry()
        days = [b.date for b in demo_bars[-5:]]

        def run_days(store, upto: date) -> list[str]:
            backend = ScriptedBackend(PIPELINE_FIXTURE)
            logs = []
            for day in days:
                if day > upto:
                    break
                state, _ = run_pipeline(TICKER, day, config, store, backend, registry=registry)
                logs.append(state_to_json(state))
            return logs

        base_logs = run_days(make_store(), days[-1])
        for i, t in enumerate(days):
            pstore = make_store()
            scale_after = [b for b in demo_bars if b.date > t]
            if scale_after:
                pstore = _perturbed_store(demo_bars, t, 1.37)
                # carry the record series over so tools see identical non-price data
                for attr in ("_news", "_sentiment", "_insider", "_fundamentals"):
                    getattr(pstore, attr).update(getattr(make_store(), attr))
            plogs = run_days(pstore, t)
            assert plogs == base_logs[: i + 1], f"pipeline day {t} saw the future"
    _report(4, "future perturbation changes no decision, trade, or tool observation at or before t")


def test_criterion_05_accounting_identity(demo_store, tmp_path):
    with _budget(5.0):
        # exact proportional accounting on the hand example
        path = tmp_path / "T.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "open", "high", "low", "close", "adj_close", "volume"])
            for d, c in zip(trading_dates(date(2024, 1, 2), 3), [100.0, 110.0, 121.0]):
                writer.writerow([d.isoformat(), c, c, c, c, c, 1000])
        store = MarketDataStore()
        store.load_ohlcv(path, "T")
        report = run_backtest(
            StrategySource(make_strategy("buy_and_hold")), "T", date(2024, 1, 1), date(2024, 2, 1), store
        )
        assert report.equity_curve.values == [100_000.0, 110_000.0, 121_000.0]

        # equity == cash + units * close at every step, via the independent
        # ledger oracle, for every strategy with and without costs
        start, end = demo_store.span(TICKER)
        bars = demo_store.bars_as_of(TICKER, end)
        closes = [b.close for b in bars]
        highs, lows, _, _ = ([b.high for b in bars], [b.low for b in bars], None, None)
        for name in STRATEGY_NAMES:
            signals = {
                "buy_and_hold": oracles.oracle_buy_and_hold_signals(len(bars)),
                "macd": oracles.oracle_macd_signals(closes),
                "kdj_rsi": oracles.oracle_kdj_rsi_signals(highs, lows, closes),
                "zmr": oracles.oracle_zmr_signals(closes),
                "sma": oracles.oracle_sma_signals(closes),
            }[name]
            for bps in (0.0, 25.0):
                got = run_backtest(
                    StrategySource(make_strategy(name)), TICKER, start, end, demo_store,
                    BacktestConfig(cost_bps=bps),
                ).equity_curve.values
                want = oracles.oracle_backtest_equity(closes, signals, cost_bps=bps)
                for g, w in zip(got, want):
                    assert g == pytest.approx(w, abs=TOL)
    _report(5, "equity == cash + units*close at every step; Buy&Hold example exact")


def test_criterion_06_protocol_counts(demo_store, pipeline_days):
    config = AgentsConfig(research_rounds=2, risk_rounds=1)
    backend = ScriptedBackend(PIPELINE_FIXTURE)
    day = pipeline_days[0]
    state, _ = run_pipeline(TICKER, day, config, demo_store, backend, registry=default_registry())
    doc = json.loads(state_to_json(state))

    research = doc["investment_debate"]["utterances"]
    assert len(research) == 4
    assert [u["round"] for u in research] == [1, 1, 2, 2]
    assert [u["role"] for u in research] == ["BullResearcher", "BearResearcher"] * 2
    assert doc["investment_debate"]["verdict"] is not None

    risk = doc["risk_debate"]["utterances"]
    assert len(risk) == 3
    assert [u["role"] for u in risk] == ["RiskyAnalyst", "SafeAnalyst", "NeutralAnalyst"]
    assert doc["risk_debate"]["verdict"] is not None

    for slot in ("market_report", "sentiment_report", "news_report", "fundamentals_report"):
        assert doc[slot] is not None, f"slot {slot} not filled"
    _report(6, "n=2/1 debate yields 4+3 utterances in order with one verdict each, slots filled")


@pytest.fixture(scope="module")
def replay_runs(tmp_path_factory):
    """Two full scripted 5-day runs writing session logs, trades, metrics."""
    runs = []
    guard = socket.socket

    def deny(*args, **kwargs):  # criterion 7 demands no network
        raise AssertionError("network access attempted during scripted replay")

    socket.socket = deny
    try:
        t0 = time.monotonic()
        for label in ("a", "b"):
            out = tmp_path_factory.mktemp(f"replay_{label}")
            store = make_store()
            start, end = date(2024, 12, 10), date(2024, 12, 16)
            config = AgentsConfig(research_rounds=2, risk_rounds=1)
            source = AgentDecisionSource(
                config,
                ScriptedBackend(PIPELINE_FIXTURE),
                registry=default_registry(),
                session_dir=out / "sessions",
            )
            report = run_backtest(source, TICKER, start, end, store)
            report.write_trades_csv(out / "trades.csv")
            report.write_metrics_json(out / "metrics.json")
            runs.append((out, source, report))
        elapsed = time.monotonic() - t0
    finally:
        socket.socket = guard
    assert elapsed < 5.0, f"two scripted replays took {elapsed:.2f}s"
    return runs


def test_criterion_07_end_to_end_scripted_replay(replay_runs):
    (out_a, source_a, report_a), (out_b, source_b, report_b) = replay_runs
    assert len(source_a.states) == 5
    assert all(s.final_decision is not None for s in source_a.states)

    logs_a = sorted((out_a / "sessions").glob("*.json"))
    logs_b = sorted((out_b / "sessions").glob("*.json"))
    assert len(logs_a) == len(logs_b) == 5
    for fa, fb in zip(logs_a, logs_b):
        assert fa.read_bytes() == fb.read_bytes(), f"session log {fa.name} differs"
    assert (out_a / "trades.csv").read_bytes() == (out_b / "trades.csv").read_bytes()
    assert (out_a / "metrics.json").read_bytes() == (out_b / "metrics.json").read_bytes()
    _report(7, "5-day scripted replay: byte-identical session logs, trades.csv, metrics.json")


def test_criterion_08_tier_routing_audit(replay_runs):
    (_, source, _) = replay_runs[0]
    log = source.backend.request_log
    assert log, "request log is empty"
    reasoning_roles = {
        Role.TechnicalAnalyst.value,
        Role.SentimentAnalyst.value,
        Role.NewsAnalyst.value,
        Role.FundamentalsAnalyst.value,
        Role.BullResearcher.value,
        Role.BearResearcher.value,
        Role.Trader.value,
        Role.RiskyAnalyst.value,
        Role.SafeAnalyst.value,
        Role.NeutralAnalyst.value,
        Role.Facilitator.value,
        Role.FundManager.value,
    }
    seen_roles = set()
    for entry in log:
        if entry.purpose == "reasoning":
            assert entry.tier == "deep", f"{entry.role} step {entry.step} ran on {entry.tier}"
            seen_roles.add(entry.role)
    assert seen_roles == reasoning_roles
    _report(8, "request log shows deep tier for every analyst, researcher, trader, facilitator, manager step")


def test_criterion_09_analyst_concurrency_equivalence(pipeline_days):
    day = pipeline_days[0]
    states = []
    for concurrent in (False, True):
        config = AgentsConfig(research_rounds=2, risk_rounds=1, concurrent_analysts=concurrent)
        backend = ScriptedBackend(PIPELINE_FIXTURE)
        state, _ = run_pipeline(TICKER, day, config, make_store(), backend, registry=default_registry())
        states.append(state_to_json(state))
    assert states[0] == states[1]
    _report(9, "concurrent and sequential analyst phases produce identical GlobalState")


def test_criterion_10_scale_invariance(demo_store):
    start, end = demo_store.span(TICKER)
    report = run_backtest(StrategySource(make_strategy("macd")), TICKER, start, end, demo_store)
    values = report.equity_curve.values
    base = metrics.compute_report(values, rf_annual=0.03)
    scaled = metrics.compute_report([v * 1000.0 for v in values], rf_annual=0.03)
    assert scaled.cumulative_return_pct == pytest.approx(base.cumulative_return_pct, abs=TOL)
    assert scaled.annualized_return_pct == pytest.approx(base.annualized_return_pct, abs=TOL)
    assert scaled.max_drawdown_pct == pytest.approx(base.max_drawdown_pct, abs=TOL)
    assert scaled.sharpe_ratio == pytest.approx(base.sharpe_ratio, abs=TOL)
    assert scaled.sharpe_annualized == pytest.approx(base.sharpe_annualized, abs=TOL)
    _report(10, "x1000 equity scaling leaves CR, AR, SR, MDD unchanged to 1e-9")
