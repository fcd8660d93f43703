#!/usr/bin/env python3
"""Regenerate the shipped test fixtures under tests/data/.

Produces a deterministic 250-bar random-walk OHLCV CSV for ticker DEMO,
companion news/sentiment/insider/fundamentals JSON documents, and a
5-trading-day scripted pipeline fixture aligned to the last five bars.
Everything is seeded, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from datetime import date, timedelta
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"
TICKER = "DEMO"
SEED = 20240102
N_BARS = 250
RESEARCH_ROUNDS = 2
RISK_ROUNDS = 1


def trading_dates(start: date, n: int) -> list[date]:
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def make_bars() -> list[dict]:
    rng = np.random.default_rng(SEED)
    dates = trading_dates(date(2024, 1, 2), N_BARS)
    close = 100.0
    rows = []
    for d in dates:
        open_ = close * float(np.exp(rng.normal(0.0, 0.004)))
        close = close * float(np.exp(rng.normal(0.0003, 0.02)))
        hi_pad = abs(float(rng.normal(0.0, 0.006)))
        lo_pad = abs(float(rng.normal(0.0, 0.006)))
        high = max(open_, close) * (1 + hi_pad)
        low = min(open_, close) * (1 - lo_pad)
        volume = int(rng.integers(100_000, 5_000_000))
        rows.append(
            {
                "date": d.isoformat(),
                "open": f"{open_:.4f}",
                "high": f"{high:.4f}",
                "low": f"{low:.4f}",
                "close": f"{close:.4f}",
                "adj_close": f"{close:.4f}",
                "volume": str(volume),
            }
        )
    return rows


def write_csv(rows: list[dict]) -> list[date]:
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / f"{TICKER}.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["date", "open", "high", "low", "close", "adj_close", "volume"])
        writer.writeheader()
        writer.writerows(rows)
    return [date.fromisoformat(r["date"]) for r in rows]


def write_records(dates: list[date]) -> None:
    rng = np.random.default_rng(SEED + 1)
    sources = ["reuters", "bloomberg", "reddit"]
    news = []
    for i, d in enumerate(dates):
        if i % 3 == 0:
            src = sources[(i // 3) % len(sources)]
            news.append(
                {
                    "date": d.isoformat(),
                    "source": src,
                    "headline": f"{TICKER} update {i}",
                    "body": f"Desk note {i}: flows and positioning look {'constructive' if i % 2 else 'mixed'}.",
                }
            )
    sentiment = [
        {
            "date": d.isoformat(),
            "count": int(rng.integers(1, 6)),
            "normalized_score": round(float(rng.uniform(-0.6, 0.6)), 4),
        }
        for i, d in enumerate(dates)
        if i % 2 == 0
    ]
    insider = []
    for i, d in enumerate(dates):
        if i % 21 == 10:
            insider.append(
                {
                    "date": d.isoformat(),
                    "person": f"Officer {chr(65 + (i // 21) % 6)}",
                    "kind": "transaction",
                    "shares": int(rng.integers(-20_000, 20_000)),
                    "price": round(float(rng.uniform(80, 120)), 2),
                }
            )
        if i % 21 == 20:
            insider.append(
                {
                    "date": d.isoformat(),
                    "person": "aggregate",
                    "kind": "sentiment",
                    "mspr": round(float(rng.uniform(-1, 1)), 4),
                }
            )
    fundamentals = [
        {
            "as_of": dates[q].isoformat(),
            "metrics": {
                "pe_ratio": round(float(rng.uniform(15, 40)), 3),
                "gross_margin": round(float(rng.uniform(0.3, 0.5)), 4),
                "roe": round(float(rng.uniform(0.1, 0.4)), 4),
                "current_ratio": round(float(rng.uniform(0.8, 2.0)), 4),
                "market_cap": round(float(rng.uniform(1e9, 5e9)), 0),
                "shares_outstanding": 50_000_000.0,
            },
        }
        for q in (0, 63, 126, 189)
    ]
    docs = {
        "news": news,
        "sentiment": sentiment,
        "insider": insider,
        "fundamentals": fundamentals,
    }
    for kind, records in docs.items():
        doc = {"ticker": TICKER, "kind": kind, "records": records}
        (OUT / f"{TICKER}_{kind}.json").write_text(json.dumps(doc, indent=2) + "\n")


def _tc(name: str, **arguments) -> dict:
    return {"tool_name": name, "arguments": arguments}


def _text(text: str) -> dict:
    return {"kind": "text", "text": text}


def _calls(*calls: dict) -> dict:
    return {"kind": "tool_calls", "tool_calls": list(calls)}


def pipeline_entries(days: list[date]) -> list[dict]:
    """Scripted responses for a 5-day full-pipeline run (rounds 2/1)."""
    plan = [
        # (verdict, trader, risk verdict, final)
        ("bull", "BUY", "neutral", "BUY"),
        ("bear", "HOLD", "safe", "HOLD"),
        ("bear", "SELL", "safe", "SELL"),
        ("bull", "BUY", "neutral", "HOLD"),  # fund manager overrides the trader
        ("bull", "BUY", "risky", "BUY"),
    ]
    entries: list[dict] = []

    def add(role, day, step, response):
        entries.append({"role": role, "day": day.isoformat(), "step": step, "response": response})

    for di, day in enumerate(days):
        iso = day.isoformat()
        week_ago = (day - timedelta(days=7)).isoformat()
        verdict, trader_action, risk_verdict, final_action = plan[di]

        add("TechnicalAnalyst", day, 0, _calls(_tc("get_YFin_data", symbol=TICKER, curr_date=iso)))
        add(
            "TechnicalAnalyst",
            day,
            1,
            _calls(
                _tc("get_stockstats_indicators_report", symbol=TICKER, indicator="rsi", curr_date=iso),
                _tc("get_stockstats_indicators_report", symbol=TICKER, indicator="macd", curr_date=iso),
                _tc("get_stockstats_indicators_report", symbol=TICKER, indicator="boll", curr_date=iso),
            ),
        )
        add(
            "TechnicalAnalyst",
            day,
            2,
            _text(
                f"Technical read for {TICKER} on {iso} (day {di + 1}): momentum is"
                f" {'firming' if di % 2 == 0 else 'fading'} and bands are stable.\n"
                "- RSI in neutral band\n- MACD histogram near zero\n- Price inside bands"
            ),
        )

        add(
            "SentimentAnalyst",
            day,
            0,
            _calls(
                _tc("get_reddit_stock_info", query=TICKER, start_date=week_ago, end_date=iso),
                _tc("get_EODHD_sentiment", symbol=TICKER, curr_date=iso),
            ),
        )
        add(
            "SentimentAnalyst",
            day,
            1,
            _text(
                f"Sentiment read for {TICKER} on {iso}: chatter volume is modest.\n"
                f"- Net sentiment {'positive' if di % 2 == 0 else 'soft'}\n- No viral threads"
            ),
        )

        add(
            "NewsAnalyst",
            day,
            0,
            _calls(
                _tc("get_EODHD_news", start_date=week_ago, end_date=iso),
                _tc("get_finnhub_news", ticker=TICKER, start_date=week_ago, end_date=iso),
            ),
        )
        add(
            "NewsAnalyst",
            day,
            1,
            _text(
                f"News read for {TICKER} on {iso}: macro tape is quiet, company flow routine.\n"
                "- No guidance changes\n- Macro calendar light"
            ),
        )

        add(
            "FundamentalsAnalyst",
            day,
            0,
            _calls(
                _tc("get_finnhub_company_profile", ticker=TICKER),
                _tc("get_finnhub_basic_company_financials", ticker=TICKER),
                _tc("get_finnhub_company_financials_history", ticker=TICKER, freq="quarterly", end_date=iso),
                _tc("get_finnhub_company_insider_sentiment", ticker=TICKER, curr_date=iso),
                _tc("get_finnhub_company_insider_transactions", ticker=TICKER, curr_date=iso),
            ),
        )
        add(
            "FundamentalsAnalyst",
            day,
            1,
            _text(
                f"Fundamentals read for {TICKER} on {iso}: margins steady, leverage manageable.\n"
                "- Valuation fair\n- Insider activity unremarkable"
            ),
        )

        for r in range(RESEARCH_ROUNDS):
            add("BullResearcher", day, r, _text(f"Round {r + 1} bull case on {iso}: momentum plus steady fundamentals argue for upside."))
            add("BearResearcher", day, r, _text(f"Round {r + 1} bear case on {iso}: stretched valuation and soft catalysts cap upside."))
        add(
            "Facilitator",
            day,
            0,
            _text(f"The {verdict} case carried round {RESEARCH_ROUNDS} on {iso}.\nVERDICT: {verdict.upper()}"),
        )

        add(
            "Trader",
            day,
            0,
            _text(f"Weighing the debate on {iso}, I size a full position accordingly.\nFINAL DECISION: {trader_action}"),
        )

        add("RiskyAnalyst", day, 0, _text(f"Risk-on view for {iso}: volatility is opportunity; press the edge."))
        add("SafeAnalyst", day, 0, _text(f"Capital-preservation view for {iso}: tighten exposure, respect drawdown limits."))
        add("NeutralAnalyst", day, 0, _text(f"Balanced view for {iso}: moderate sizing with staged entries."))
        add(
            "Facilitator",
            day,
            1,
            _text(f"Adjusted plan for {iso}: keep the {risk_verdict} posture with standard stops.\nVERDICT: {risk_verdict.upper()}"),
        )

        add(
            "FundManager",
            day,
            0,
            _text(f"Reviewing the risk discussion for {iso}, I approve the plan.\nFINAL DECISION: {final_action}"),
        )
    return entries


def main() -> None:
    rows = make_bars()
    dates = write_csv(rows)
    write_records(dates)
    days = dates[-5:]
    entries = pipeline_entries(days)
    (OUT / "pipeline_fixture.json").write_text(json.dumps(entries, indent=2) + "\n")
    print(f"wrote fixtures to {OUT} ({len(rows)} bars; pipeline days {days[0]}..{days[-1]})")


if __name__ == "__main__":
    main()
