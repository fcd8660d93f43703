"""Tool registry backing the analyst ReAct loops.

Every handler reads through the market data store's as-of queries with the
requested dates clamped to the pipeline's current day, so no observation
can contain data from the future.  The registry publishes OpenAI-style
function descriptors for prompt construction and validates call arguments
against them.

The registered names mirror the data-provider wrappers the analysts call
(`get_YFin_data`, `get_stockstats_indicators_report`, ...); here each is
served from the local dataset.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Callable

from . import indicators
from .marketdata import MarketDataStore

DEFAULT_PRICE_WINDOW_DAYS = 21
DEFAULT_SENTIMENT_WINDOW_DAYS = 14
DEFAULT_INSIDER_WINDOW_DAYS = 90
DEFAULT_REPORT_ROWS = 14


class ToolError(Exception):
    pass


class UnknownToolError(ToolError):
    def __init__(self, name: str):
        super().__init__(f"unknown tool {name!r}")
        self.tool_name = name


class ToolArgumentError(ToolError):
    pass


@dataclass(frozen=True)
class ToolContext:
    """Where a tool call executes: the store, the pipeline ticker, and the day
    every observation is clamped to."""

    store: MarketDataStore
    ticker: str
    day: date


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    parameters: dict  # JSON-schema object: {"properties": {...}, "required": [...]}
    handler: Callable[[ToolContext, dict], str]


class ToolRegistry:
    def __init__(self):
        self._tools: dict[str, ToolSpec] = {}

    def register(self, spec: ToolSpec) -> None:
        if spec.name in self._tools:
            raise ToolError(f"tool {spec.name!r} already registered")
        self._tools[spec.name] = spec

    def names(self) -> list[str]:
        return sorted(self._tools)

    def get(self, name: str) -> ToolSpec:
        if name not in self._tools:
            raise UnknownToolError(name)
        return self._tools[name]

    def schemas(self, names: list[str] | None = None) -> list[dict]:
        """Function descriptors (name/description/parameters) for prompts."""
        selected = self.names() if names is None else names
        out = []
        for name in selected:
            spec = self.get(name)
            out.append({"name": spec.name, "description": spec.description, "parameters": spec.parameters})
        return out

    def execute(self, name: str, arguments: dict, ctx: ToolContext) -> str:
        spec = self.get(name)
        self._validate(spec, arguments)
        return spec.handler(ctx, arguments)

    @staticmethod
    def _validate(spec: ToolSpec, arguments: dict) -> None:
        props = spec.parameters.get("properties", {})
        required = spec.parameters.get("required", [])
        for arg in required:
            if arg not in arguments:
                raise ToolArgumentError(f"{spec.name}: missing required argument {arg!r}")
        for arg, value in arguments.items():
            if arg not in props:
                raise ToolArgumentError(f"{spec.name}: unexpected argument {arg!r}")
            expected = props[arg].get("type")
            ok = {
                "string": lambda v: isinstance(v, str),
                "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
                "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
            }.get(expected, lambda v: True)
            if not ok(value):
                raise ToolArgumentError(f"{spec.name}: argument {arg!r} must be a {expected}")


# -- handler helpers ---------------------------------------------------------


def _parse_date(spec_name: str, arguments: dict, key: str) -> date:
    try:
        return date.fromisoformat(arguments[key])
    except ValueError:
        raise ToolArgumentError(f"{spec_name}: {key} must be an ISO date, got {arguments[key]!r}") from None


def _clamp(d: date, ctx: ToolContext) -> date:
    return min(d, ctx.day)


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _price_history(ctx: ToolContext, args: dict) -> str:
    symbol = args.get("symbol", ctx.ticker)
    end = _clamp(_parse_date("get_YFin_data", args, "curr_date"), ctx)
    bars = ctx.store.bars_as_of(symbol, end, lookback=DEFAULT_PRICE_WINDOW_DAYS)
    if not bars:
        return f"No price data for {symbol} up to {end}."
    lines = [f"Daily OHLCV for {symbol} through {end}:"]
    lines += [
        f"{b.date}: open={_fmt(b.open)} high={_fmt(b.high)} low={_fmt(b.low)} "
        f"close={_fmt(b.close)} adj_close={_fmt(b.adj_close)} volume={b.volume}"
        for b in bars
    ]
    return "\n".join(lines)


def _indicator_report(ctx: ToolContext, args: dict) -> str:
    symbol = args.get("symbol", ctx.ticker)
    name = args["indicator"]
    end = _clamp(_parse_date("get_stockstats_indicators_report", args, "curr_date"), ctx)
    if name not in indicators.INDICATORS:
        raise ToolArgumentError(
            f"get_stockstats_indicators_report: unknown indicator {name!r}; "
            f"known: {', '.join(sorted(indicators.INDICATORS))}"
        )
    bars = ctx.store.bars_as_of(symbol, end)
    if not bars:
        return f"No price data for {symbol} up to {end}."
    series_list = indicators.compute(name, bars)
    recent = bars[-DEFAULT_REPORT_ROWS:]
    lines = [f"Indicator {name} for {symbol} through {end}:"]
    offset = len(bars) - len(recent)
    for i, b in enumerate(recent):
        vals = []
        for series in series_list:
            v = series.value_at(offset + i)
            vals.append(f"{series.name}={'n/a' if v is None else _fmt(v)}")
        lines.append(f"{b.date}: " + " ".join(vals))
    return "\n".join(lines)


def _ticker_news(ctx: ToolContext, args: dict) -> str:
    ticker = args.get("ticker", ctx.ticker)
    start = _parse_date("get_finnhub_news", args, "start_date")
    end = _clamp(_parse_date("get_finnhub_news", args, "end_date"), ctx)
    if start > end:
        return f"No news for {ticker} in empty range {start}..{end}."
    items = ctx.store.news_as_of(ticker, start, end)
    if not items:
        return f"No news for {ticker} between {start} and {end}."
    lines = [f"News for {ticker} from {start} to {end}:"]
    lines += [f"{n.date} [{n.source}] {n.headline}: {n.body}" for n in items]
    return "\n".join(lines)


def _global_news(ctx: ToolContext, args: dict) -> str:
    start = _parse_date("get_EODHD_news", args, "start_date")
    end = _clamp(_parse_date("get_EODHD_news", args, "end_date"), ctx)
    if start > end:
        return f"No market news in empty range {start}..{end}."
    items = ctx.store.all_news_as_of(start, end)
    if not items:
        return f"No market news between {start} and {end}."
    lines = [f"Market-wide news from {start} to {end}:"]
    lines += [f"{n.date} [{n.source}] {n.headline}: {n.body}" for n in items]
    return "\n".join(lines)


def _reddit_info(ctx: ToolContext, args: dict) -> str:
    start = _parse_date("get_reddit_stock_info", args, "start_date")
    end = _clamp(_parse_date("get_reddit_stock_info", args, "end_date"), ctx)
    if start > end:
        return f"No social posts in empty range {start}..{end}."
    items = [n for n in ctx.store.news_as_of(ctx.ticker, start, end) if n.source.lower() == "reddit"]
    query = args.get("query", ctx.ticker)
    if not items:
        return f"No social media posts matching {query!r} between {start} and {end}."
    lines = [f"Social media posts matching {query!r} from {start} to {end}:"]
    lines += [f"{n.date} {n.headline}: {n.body}" for n in items]
    return "\n".join(lines)


def _sentiment_report(ctx: ToolContext, args: dict) -> str:
    symbol = args.get("symbol", ctx.ticker)
    end = _clamp(_parse_date("get_EODHD_sentiment", args, "curr_date"), ctx)
    start = end - timedelta(days=DEFAULT_SENTIMENT_WINDOW_DAYS)
    points = ctx.store.sentiment_as_of(symbol, start, end)
    if not points:
        return f"No sentiment data for {symbol} up to {end}."
    lines = [f"Daily sentiment for {symbol} through {end}:"]
    lines += [
        f"{p.date}: count={p.count} normalized_score={p.normalized_score:+.4f}" for p in points
    ]
    return "\n".join(lines)


def _company_profile(ctx: ToolContext, args: dict) -> str:
    ticker = args.get("ticker", ctx.ticker)
    snaps = ctx.store.fundamentals_as_of(ticker, date.min, ctx.day)
    if not snaps:
        return f"No company profile data for {ticker}."
    latest = snaps[-1]
    lines = [f"Company profile for {ticker} (as of {latest.as_of}):"]
    for key in ("market_cap", "shares_outstanding", "pe_ratio", "dividend_yield"):
        if key in latest.metrics:
            lines.append(f"{key}={_fmt(latest.metrics[key])}")
    return "\n".join(lines)


def _basic_financials(ctx: ToolContext, args: dict) -> str:
    ticker = args.get("ticker", ctx.ticker)
    snaps = ctx.store.fundamentals_as_of(ticker, date.min, ctx.day)
    if not snaps:
        return f"No financials for {ticker}."
    latest = snaps[-1]
    lines = [f"Basic financials for {ticker} (as of {latest.as_of}):"]
    lines += [f"{k}={_fmt(v)}" for k, v in sorted(latest.metrics.items())]
    return "\n".join(lines)


def _financials_history(ctx: ToolContext, args: dict) -> str:
    ticker = args.get("ticker", ctx.ticker)
    end = _clamp(_parse_date("get_finnhub_company_financials_history", args, "end_date"), ctx)
    snaps = ctx.store.fundamentals_as_of(ticker, date.min, end)
    if not snaps:
        return f"No financial history for {ticker} up to {end}."
    freq = args.get("freq", "quarterly")
    lines = [f"Financial history for {ticker} ({freq}) through {end}:"]
    for snap in snaps:
        metrics = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(snap.metrics.items()))
        lines.append(f"{snap.as_of}: {metrics}")
    return "\n".join(lines)


def _insider_sentiment(ctx: ToolContext, args: dict) -> str:
    ticker = args.get("ticker", ctx.ticker)
    end = _clamp(_parse_date("get_finnhub_company_insider_sentiment", args, "curr_date"), ctx)
    start = end - timedelta(days=DEFAULT_INSIDER_WINDOW_DAYS)
    records = [r for r in ctx.store.insider_as_of(ticker, start, end) if r.kind == "sentiment"]
    if not records:
        return f"No insider sentiment for {ticker} up to {end}."
    lines = [f"Insider sentiment (MSPR) for {ticker} through {end}:"]
    lines += [f"{r.date}: mspr={r.mspr:+.4f}" for r in records]
    return "\n".join(lines)


def _insider_transactions(ctx: ToolContext, args: dict) -> str:
    ticker = args.get("ticker", ctx.ticker)
    end = _clamp(_parse_date("get_finnhub_company_insider_transactions", args, "curr_date"), ctx)
    start = end - timedelta(days=DEFAULT_INSIDER_WINDOW_DAYS)
    records = [r for r in ctx.store.insider_as_of(ticker, start, end) if r.kind == "transaction"]
    if not records:
        return f"No insider transactions for {ticker} up to {end}."
    lines = [f"Insider transactions for {ticker} through {end}:"]
    for r in records:
        price = "n/a" if r.price is None else _fmt(r.price)
        lines.append(f"{r.date}: {r.person} shares={r.shares:+d} price={price}")
    return "\n".join(lines)


def _date_arg(desc: str) -> dict:
    return {"type": "string", "description": f"{desc} (YYYY-MM-DD)"}


def default_registry() -> ToolRegistry:
    """The standard registry wired to local dataset adapters."""
    registry = ToolRegistry()
    specs = [
        ToolSpec(
            "get_YFin_data",
            "Recent daily OHLCV price history for a symbol.",
            {
                "type": "object",
                "properties": {"symbol": {"type": "string"}, "curr_date": _date_arg("as-of date")},
                "required": ["symbol", "curr_date"],
            },
            _price_history,
        ),
        ToolSpec(
            "get_stockstats_indicators_report",
            "Recent values of a named technical indicator for a symbol.",
            {
                "type": "object",
                "properties": {
                    "symbol": {"type": "string"},
                    "indicator": {"type": "string", "description": f"one of: {', '.join(sorted(indicators.INDICATORS))}"},
                    "curr_date": _date_arg("as-of date"),
                },
                "required": ["symbol", "indicator", "curr_date"],
            },
            _indicator_report,
        ),
        ToolSpec(
            "get_finnhub_news",
            "Company news for a ticker within a date range.",
            {
                "type": "object",
                "properties": {
                    "ticker": {"type": "string"},
                    "start_date": _date_arg("range start"),
                    "end_date": _date_arg("range end"),
                },
                "required": ["ticker", "start_date", "end_date"],
            },
            _ticker_news,
        ),
        ToolSpec(
            "get_EODHD_news",
            "Market-wide news within a date range.",
            {
                "type": "object",
                "properties": {"start_date": _date_arg("range start"), "end_date": _date_arg("range end")},
                "required": ["start_date", "end_date"],
            },
            _global_news,
        ),
        ToolSpec(
            "get_reddit_stock_info",
            "Social media posts about a company within a date range.",
            {
                "type": "object",
                "properties": {
                    "query": {"type": "string"},
                    "start_date": _date_arg("range start"),
                    "end_date": _date_arg("range end"),
                },
                "required": ["query", "start_date", "end_date"],
            },
            _reddit_info,
        ),
        ToolSpec(
            "get_EODHD_sentiment",
            "Recent daily sentiment counts and normalized scores for a symbol.",
            {
                "type": "object",
                "properties": {"symbol": {"type": "string"}, "curr_date": _date_arg("as-of date")},
                "required": ["symbol", "curr_date"],
            },
            _sentiment_report,
        ),
        ToolSpec(
            "get_finnhub_company_profile",
            "Company profile summary.",
            {"type": "object", "properties": {"ticker": {"type": "string"}}, "required": ["ticker"]},
            _company_profile,
        ),
        ToolSpec(
            "get_finnhub_basic_company_financials",
            "Latest basic financial metrics for a company.",
            {"type": "object", "properties": {"ticker": {"type": "string"}}, "required": ["ticker"]},
            _basic_financials,
        ),
        ToolSpec(
            "get_finnhub_company_financials_history",
            "Historical financial snapshots for a company.",
            {
                "type": "object",
                "properties": {
                    "ticker": {"type": "string"},
                    "freq": {"type": "string"},
                    "end_date": _date_arg("history end"),
                },
                "required": ["ticker", "end_date"],
            },
            _financials_history,
        ),
        ToolSpec(
            "get_finnhub_company_insider_sentiment",
            "Recent monthly insider sentiment (MSPR) for a company.",
            {
                "type": "object",
                "properties": {"ticker": {"type": "string"}, "curr_date": _date_arg("as-of date")},
                "required": ["ticker", "curr_date"],
            },
            _insider_sentiment,
        ),
        ToolSpec(
            "get_finnhub_company_insider_transactions",
            "Recent insider transactions for a company.",
            {
                "type": "object",
                "properties": {"ticker": {"type": "string"}, "curr_date": _date_arg("as-of date")},
                "required": ["ticker", "curr_date"],
            },
            _insider_transactions,
        ),
    ]
    for spec in specs:
        registry.register(spec)
    return registry
