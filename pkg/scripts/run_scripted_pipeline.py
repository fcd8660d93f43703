#!/usr/bin/env python3
"""Replay the bundled 5-day scripted agent pipeline end to end.

Runs the full desk (analysts -> research debate -> trader -> risk debate ->
fund manager) for each trading day against the deterministic scripted
backend, then prints the per-day final decisions and the run metrics.
Outputs (session logs, trades.csv, equity.csv, metrics.json) land under
--out.

Usage: python scripts/run_scripted_pipeline.py [--out runs/pipeline_demo]
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "tests" / "data"

from quantdesk.agents import AgentDecisionSource, AgentsConfig  # noqa: E402
from quantdesk.backtest import run_backtest  # noqa: E402
from quantdesk.llm import ScriptedBackend  # noqa: E402
from quantdesk.marketdata import MarketDataStore  # noqa: E402
from quantdesk.tools import default_registry  # noqa: E402

TICKER = "DEMO"


def load_store() -> MarketDataStore:
    store = MarketDataStore()
    store.load_ohlcv(DATA / f"{TICKER}.csv", TICKER)
    store.load_news(DATA / f"{TICKER}_news.json")
    store.load_sentiment(DATA / f"{TICKER}_sentiment.json")
    store.load_insider(DATA / f"{TICKER}_insider.json")
    store.load_fundamentals(DATA / f"{TICKER}_fundamentals.json")
    return store


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/pipeline_demo")
    args = parser.parse_args()
    fixture = DATA / "pipeline_fixture.json"
    if not fixture.exists():
        print(f"fixture {fixture} missing; run scripts/make_fixtures.py first", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store = load_store()
    config = AgentsConfig(research_rounds=2, risk_rounds=1)
    source = AgentDecisionSource(
        config,
        ScriptedBackend(fixture),
        registry=default_registry(),
        session_dir=out / "sessions",
    )
    report = run_backtest(source, TICKER, date(2024, 12, 10), date(2024, 12, 16), store)
    report.write_trades_csv(out / "trades.csv")
    report.equity_curve.write_csv(out / "equity.csv")
    report.write_metrics_json(out / "metrics.json")

    for state in source.states:
        final = state.final_decision
        override = " (override)" if final.action is not state.trader_decision.action else ""
        print(f"{state.day}: {final.action.value}{override}  [{state.investment_debate.verdict.winner}"
              f"/{state.risk_debate.verdict.winner}]")
    print(json.dumps(report.metrics.to_dict() if report.metrics else None, indent=2, sort_keys=True))
    print(f"outputs in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
