"""Shared fixtures: the shipped 250-bar dataset and synthetic bar factories."""

from __future__ import annotations

from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from quantdesk.marketdata import Bar, MarketDataStore

DATA_DIR = Path(__file__).parent / "data"
TICKER = "DEMO"
PIPELINE_FIXTURE = DATA_DIR / "pipeline_fixture.json"


def make_store(with_records: bool = True) -> MarketDataStore:
    store = MarketDataStore()
    store.load_ohlcv(DATA_DIR / f"{TICKER}.csv", TICKER)
    if with_records:
        store.load_news(DATA_DIR / f"{TICKER}_news.json")
        store.load_sentiment(DATA_DIR / f"{TICKER}_sentiment.json")
        store.load_insider(DATA_DIR / f"{TICKER}_insider.json")
        store.load_fundamentals(DATA_DIR / f"{TICKER}_fundamentals.json")
    return store


@pytest.fixture
def store() -> MarketDataStore:
    return make_store()


@pytest.fixture(scope="session")
def fixture_bars() -> list[Bar]:
    return make_store(with_records=False).bars_as_of(TICKER, date(2030, 1, 1))


@pytest.fixture(scope="session")
def pipeline_days(fixture_bars) -> list[date]:
    return [b.date for b in fixture_bars[-5:]]


def trading_dates(start: date, n: int) -> list[date]:
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def make_random_walk_bars(n: int = 250, seed: int = 7, drift: float = 0.0003, vol: float = 0.02) -> list[Bar]:
    rng = np.random.default_rng(seed)
    dates = trading_dates(date(2024, 1, 2), n)
    close = 100.0
    bars = []
    for d in dates:
        open_ = close * float(np.exp(rng.normal(0.0, 0.004)))
        close = close * float(np.exp(rng.normal(drift, vol)))
        high = max(open_, close) * (1 + abs(float(rng.normal(0.0, 0.006))))
        low = min(open_, close) * (1 - abs(float(rng.normal(0.0, 0.006))))
        bars.append(
            Bar(
                date=d,
                open=open_,
                high=high,
                low=low,
                close=close,
                adj_close=close,
                volume=int(rng.integers(100_000, 5_000_000)),
            )
        )
    return bars


def make_trend_bars(n: int = 60, up: bool = True, start_price: float = 100.0) -> list[Bar]:
    """Monotone trend with modest intraday range; mirror-symmetric down case."""
    dates = trading_dates(date(2024, 1, 2), n)
    bars = []
    for i, d in enumerate(dates):
        step = 1.0 * i if up else -1.0 * i
        close = start_price + step
        open_ = close - (0.4 if up else -0.4)
        high = max(open_, close) + 0.5
        low = min(open_, close) - 0.5
        bars.append(Bar(date=d, open=open_, high=high, low=low, close=close, adj_close=close, volume=1_000_000))
    return bars


def make_flat_bars(n: int = 40, price: float = 50.0, volume: int = 1000) -> list[Bar]:
    return [
        Bar(date=d, open=price, high=price, low=price, close=price, adj_close=price, volume=volume)
        for d in trading_dates(date(2024, 1, 2), n)
    ]


def make_close_bars(closes, start: date = date(2024, 1, 2), volume: int = 1000) -> list[Bar]:
    """Bars whose close follows `closes`, with a small symmetric range."""
    bars = []
    for d, c in zip(trading_dates(start, len(closes)), closes):
        c = float(c)
        bars.append(
            Bar(date=d, open=c, high=c * 1.001, low=c * 0.999, close=c, adj_close=c, volume=volume)
        )
    return bars


def ohlcv_arrays(bars):
    return (
        [b.high for b in bars],
        [b.low for b in bars],
        [b.close for b in bars],
        [b.volume for b in bars],
    )
