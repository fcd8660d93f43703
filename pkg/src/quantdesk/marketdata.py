"""Time-indexed multi-modal market data with strict as-of access.

The store ingests daily OHLCV bars from CSV plus news, sentiment, insider
and fundamentals records from per-ticker JSON documents, and serves date
range queries that can never observe the future.  A `SimulationClock` may
be attached by a backtester; once attached, any query whose as-of date or
range end lies beyond the clock's current day is rejected.

File formats
------------
OHLCV CSV: header ``date,open,high,low,close,adj_close,volume``, ISO-8601
dates, ``.`` decimal separator.  One file per ticker.

News / sentiment / insider / fundamentals: one JSON document per ticker
and kind, shaped ``{"ticker": ..., "kind": ..., "records": [...]}``.
JSON Schemas for the four kinds ship under ``quantdesk/schemas/``.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path


class DataError(Exception):
    """Malformed or inconsistent input data (carries a line number when known)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class UnknownTickerError(KeyError):
    pass


class LookaheadError(Exception):
    """A query tried to reach beyond the simulation clock's current day."""


# Metric names accepted in FundamentalsSnapshot.metrics.  The vocabulary is
# intentionally small; extend here when new dataset fields appear.
FUNDAMENTAL_METRICS = frozenset(
    {
        "pe_ratio",
        "pb_ratio",
        "gross_margin",
        "operating_margin",
        "net_margin",
        "roe",
        "roa",
        "current_ratio",
        "quick_ratio",
        "debt_to_equity",
        "eps_growth",
        "revenue_growth",
        "dividend_yield",
        "payout_ratio",
        "market_cap",
        "shares_outstanding",
        "cash_flow_per_share",
    }
)

INSIDER_KINDS = ("transaction", "sentiment")


@dataclass(frozen=True)
class Bar:
    """One daily OHLCV bar.  Prices are positive; low/high bracket open/close."""

    date: date
    open: float
    high: float
    low: float
    close: float
    adj_close: float
    volume: int

    def __post_init__(self):
        for name in ("open", "high", "low", "close", "adj_close"):
            if getattr(self, name) <= 0:
                raise DataError(f"non-positive {name} {getattr(self, name)} on {self.date}")
        if self.low > self.high:
            raise DataError(f"low {self.low} > high {self.high} on {self.date}")
        if self.low > min(self.open, self.close):
            raise DataError(f"low {self.low} above open/close on {self.date}")
        if self.high < max(self.open, self.close):
            raise DataError(f"high {self.high} below open/close on {self.date}")
        if self.volume < 0:
            raise DataError(f"negative volume {self.volume} on {self.date}")


@dataclass(frozen=True)
class NewsItem:
    date: date
    source: str
    headline: str
    body: str = ""

    def __post_init__(self):
        if not self.headline:
            raise DataError(f"empty headline on {self.date}")


@dataclass(frozen=True)
class SentimentPoint:
    date: date
    count: int
    normalized_score: float

    def __post_init__(self):
        if self.count < 0:
            raise DataError(f"negative sentiment count on {self.date}")
        if not -1.0 <= self.normalized_score <= 1.0:
            raise DataError(f"sentiment score {self.normalized_score} outside [-1, 1] on {self.date}")


@dataclass(frozen=True)
class InsiderRecord:
    date: date
    person: str
    kind: str  # "transaction" or "sentiment"
    shares: int | None = None  # signed; negative = sale
    price: float | None = None
    mspr: float | None = None  # monthly share purchase ratio

    def __post_init__(self):
        if self.kind not in INSIDER_KINDS:
            raise DataError(f"unknown insider record kind {self.kind!r} on {self.date}")
        if self.kind == "transaction" and self.shares is None:
            raise DataError(f"insider transaction without shares on {self.date}")
        if self.kind == "sentiment" and self.mspr is None:
            raise DataError(f"insider sentiment without mspr on {self.date}")


@dataclass(frozen=True)
class FundamentalsSnapshot:
    as_of: date
    metrics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.metrics) - FUNDAMENTAL_METRICS
        if unknown:
            raise DataError(f"unknown fundamental metrics {sorted(unknown)} as of {self.as_of}")

    @property
    def date(self) -> date:  # uniform accessor for range queries
        return self.as_of


class SimulationClock:
    """Mutable current-day marker a backtester steps through the simulation."""

    def __init__(self, current_day: date | None = None):
        self.current_day = current_day

    def set_day(self, day: date) -> None:
        self.current_day = day


OHLCV_HEADER = ["date", "open", "high", "low", "close", "adj_close", "volume"]

_JSON_KINDS = ("news", "sentiment", "insider", "fundamentals")


def schema_path(kind: str) -> Path:
    """Path to the shipped JSON Schema for one of the JSON record kinds."""
    if kind not in _JSON_KINDS:
        raise ValueError(f"unknown schema kind {kind!r}; expected one of {_JSON_KINDS}")
    return Path(__file__).parent / "schemas" / f"{kind}.schema.json"


class MarketDataStore:
    """Per-ticker sorted series with as-of-guarded queries.

    Ingestion is single-threaded; after loading, the store is treated as
    immutable and is safe for concurrent reads.
    """

    def __init__(self):
        self._bars: dict[str, list[Bar]] = {}
        self._news: dict[str, list[NewsItem]] = {}
        self._sentiment: dict[str, list[SentimentPoint]] = {}
        self._insider: dict[str, list[InsiderRecord]] = {}
        self._fundamentals: dict[str, list[FundamentalsSnapshot]] = {}
        self._clock: SimulationClock | None = None
        self._load_lock = threading.Lock()

    # -- clock -------------------------------------------------------------

    def attach_clock(self, clock: SimulationClock) -> None:
        self._clock = clock

    def detach_clock(self) -> None:
        self._clock = None

    def _guard(self, end: date, what: str) -> None:
        if self._clock is not None and self._clock.current_day is not None:
            if end > self._clock.current_day:
                raise LookaheadError(
                    f"{what} reaches {end}, beyond simulation day {self._clock.current_day}"
                )

    # -- ingestion ---------------------------------------------------------

    def load_ohlcv(self, path: str | Path, ticker: str) -> int:
        """Load one OHLCV CSV for `ticker`; returns the number of bars added.

        Duplicate (ticker, date) bars and date regressions are rejected with
        the offending line number.
        """
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such file: {path}")
        new_bars: list[Bar] = []
        with self._load_lock:
            existing_dates = {b.date for b in self._bars.get(ticker, [])}
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                try:
                    header = next(reader)
                except StopIteration:
                    raise DataError(f"{path}: empty file, expected header {','.join(OHLCV_HEADER)}")
                if [h.strip() for h in header] != OHLCV_HEADER:
                    raise DataError(f"{path}: bad header {header!r}, expected {OHLCV_HEADER}", line=1)
                prev_date: date | None = None
                for lineno, row in enumerate(reader, start=2):
                    if not row or all(not cell.strip() for cell in row):
                        continue
                    if len(row) != len(OHLCV_HEADER):
                        raise DataError(f"{path}: expected {len(OHLCV_HEADER)} fields, got {len(row)}", line=lineno)
                    try:
                        bar = Bar(
                            date=date.fromisoformat(row[0].strip()),
                            open=float(row[1]),
                            high=float(row[2]),
                            low=float(row[3]),
                            close=float(row[4]),
                            adj_close=float(row[5]),
                            volume=int(row[6]),
                        )
                    except DataError as exc:
                        raise DataError(f"{path}: {exc.args[0]}", line=lineno) from None
                    except ValueError as exc:
                        raise DataError(f"{path}: {exc}", line=lineno) from None
                    if prev_date is not None and bar.date <= prev_date:
                        raise DataError(f"{path}: date {bar.date} not after {prev_date}", line=lineno)
                    if bar.date in existing_dates:
                        raise DataError(f"{path}: duplicate bar for ({ticker}, {bar.date})", line=lineno)
                    prev_date = bar.date
                    new_bars.append(bar)
            series = self._bars.setdefault(ticker, [])
            series.extend(new_bars)
            series.sort(key=lambda b: b.date)
        return len(new_bars)

    def _load_json_doc(self, path: str | Path, kind: str) -> tuple[str, list[dict]]:
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such file: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(doc, dict) or "ticker" not in doc or "records" not in doc:
            raise DataError(f"{path}: expected object with 'ticker' and 'records' keys")
        if doc.get("kind", kind) != kind:
            raise DataError(f"{path}: document kind {doc.get('kind')!r}, expected {kind!r}")
        if not isinstance(doc["records"], list):
            raise DataError(f"{path}: 'records' must be an array")
        return str(doc["ticker"]), doc["records"]

    def load_news(self, path: str | Path) -> int:
        ticker, records = self._load_json_doc(path, "news")
        items = [
            NewsItem(
                date=date.fromisoformat(r["date"]),
                source=r.get("source", ""),
                headline=r["headline"],
                body=r.get("body", ""),
            )
            for r in records
        ]
        return self._merge(self._news, ticker, items)

    def load_sentiment(self, path: str | Path) -> int:
        ticker, records = self._load_json_doc(path, "sentiment")
        items = [
            SentimentPoint(
                date=date.fromisoformat(r["date"]),
                count=int(r["count"]),
                normalized_score=float(r["normalized_score"]),
            )
            for r in records
        ]
        return self._merge(self._sentiment, ticker, items)

    def load_insider(self, path: str | Path) -> int:
        ticker, records = self._load_json_doc(path, "insider")
        items = [
            InsiderRecord(
                date=date.fromisoformat(r["date"]),
                person=r["person"],
                kind=r["kind"],
                shares=r.get("shares"),
                price=r.get("price"),
                mspr=r.get("mspr"),
            )
            for r in records
        ]
        return self._merge(self._insider, ticker, items)

    def load_fundamentals(self, path: str | Path) -> int:
        ticker, records = self._load_json_doc(path, "fundamentals")
        items = [
            FundamentalsSnapshot(
                as_of=date.fromisoformat(r["as_of"]),
                metrics={k: float(v) for k, v in r["metrics"].items()},
            )
            for r in records
        ]
        return self._merge(self._fundamentals, ticker, items)

    def _merge(self, table: dict[str, list], ticker: str, items: list) -> int:
        with self._load_lock:
            series = table.setdefault(ticker, [])
            series.extend(items)
            series.sort(key=lambda r: r.date)
        return len(items)

    # -- queries -----------------------------------------------------------

    def tickers(self) -> list[str]:
        return sorted(self._bars)

    def _bar_series(self, ticker: str) -> list[Bar]:
        if ticker not in self._bars:
            raise UnknownTickerError(ticker)
        return self._bars[ticker]

    def bars_as_of(self, ticker: str, as_of: date, lookback: int | None = None) -> list[Bar]:
        """Bars with date in (as_of - lookback days, as_of], ascending.

        `lookback=None` returns the entire history up to `as_of`.  Never
        returns a bar dated after `as_of`.
        """
        if lookback is not None and lookback <= 0:
            raise ValueError(f"lookback must be positive, got {lookback}")
        self._guard(as_of, "bars_as_of")
        series = self._bar_series(ticker)
        lo = as_of - timedelta(days=lookback) if lookback is not None else None
        return [b for b in series if b.date <= as_of and (lo is None or b.date > lo)]

    def _range_query(self, table: dict[str, list], ticker: str, start: date, end: date, what: str) -> list:
        if start > end:
            raise ValueError(f"{what}: inverted range {start}..{end}")
        self._guard(end, what)
        series = table.get(ticker, [])
        if ticker not in table and ticker not in self._bars:
            raise UnknownTickerError(ticker)
        return [r for r in series if start <= r.date <= end]

    def news_as_of(self, ticker: str, start: date, end: date) -> list[NewsItem]:
        return self._range_query(self._news, ticker, start, end, "news_as_of")

    def all_news_as_of(self, start: date, end: date) -> list[NewsItem]:
        """News across every ticker in [start, end], date-ascending (macro view)."""
        if start > end:
            raise ValueError(f"all_news_as_of: inverted range {start}..{end}")
        self._guard(end, "all_news_as_of")
        items = [n for series in self._news.values() for n in series if start <= n.date <= end]
        items.sort(key=lambda n: (n.date, n.source, n.headline))
        return items

    def sentiment_as_of(self, ticker: str, start: date, end: date) -> list[SentimentPoint]:
        return self._range_query(self._sentiment, ticker, start, end, "sentiment_as_of")

    def insider_as_of(self, ticker: str, start: date, end: date) -> list[InsiderRecord]:
        return self._range_query(self._insider, ticker, start, end, "insider_as_of")

    def fundamentals_as_of(self, ticker: str, start: date, end: date) -> list[FundamentalsSnapshot]:
        return self._range_query(self._fundamentals, ticker, start, end, "fundamentals_as_of")

    def trading_days(self, ticker: str, start: date, end: date) -> list[date]:
        """Trading days are exactly the dates with bars, within [start, end]."""
        if start > end:
            raise ValueError(f"trading_days: inverted range {start}..{end}")
        return [b.date for b in self._bar_series(ticker) if start <= b.date <= end]

    def span(self, ticker: str) -> tuple[date, date]:
        series = self._bar_series(ticker)
        if not series:
            raise DataError(f"no bars loaded for {ticker}")
        return series[0].date, series[-1].date

    def counts(self, ticker: str) -> dict[str, int]:
        return {
            "bars": len(self._bars.get(ticker, [])),
            "news": len(self._news.get(ticker, [])),
            "sentiment": len(self._sentiment.get(ticker, [])),
            "insider": len(self._insider.get(ticker, [])),
            "fundamentals": len(self._fundamentals.get(ticker, [])),
        }
