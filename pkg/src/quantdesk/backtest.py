"""Daily-stepped backtester with strict no-lookahead clocking.

For each trading day the engine (1) clamps the simulation clock, (2) asks
the decision source for a signal computed from data at or before that day,
(3) executes at the day's close under full-allocation position semantics,
and (4) marks equity.  Metrics are computed from the finished curve.

Position semantics (fractional units, full allocation):

* Buy while short reverses to fully long; while flat opens fully long;
  while long is a no-op.
* Sell is symmetric when shorting is allowed; with ``allow_short=False``
  a Sell from flat is a no-op and from long closes to flat.
* Hold never trades.

Costs are charged per transacted notional (``cost_bps`` basis points) and
deducted from cash, so with zero costs equity is preserved across trades
exactly: equity = cash + units * close at every step.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Protocol

from .marketdata import MarketDataStore, SimulationClock
from .metrics import MetricsReport, compute_report
from .strategies import Signal, Strategy


class BacktestError(Exception):
    pass


@dataclass(frozen=True)
class BacktestConfig:
    initial_capital: float = 100_000.0
    cost_bps: float = 0.0
    allow_short: bool = True
    execution: str = "close_of_decision_day"

    def __post_init__(self):
        if self.initial_capital <= 0:
            raise ValueError(f"initial_capital must be positive, got {self.initial_capital}")
        if self.cost_bps < 0:
            raise ValueError(f"cost_bps must be >= 0, got {self.cost_bps}")
        if self.execution != "close_of_decision_day":
            raise ValueError(f"unsupported execution mode {self.execution!r}")


@dataclass(frozen=True)
class PortfolioState:
    cash: float
    position_units: float = 0.0  # signed; negative = short
    last_mark: float = 0.0

    def equity(self, price: float | None = None) -> float:
        mark = self.last_mark if price is None else price
        return self.cash + self.position_units * mark


@dataclass(frozen=True)
class TradeRecord:
    """One executed transition.  `units` is the total quantity transacted
    (both legs for a reverse); `cost` = units * price * cost_bps / 10000."""

    date: date
    action: str  # open_long | open_short | close | reverse
    units: float
    price: float
    cost: float


@dataclass
class EquityCurve:
    points: list[tuple[date, float]] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]

    def append(self, day: date, equity: float) -> None:
        self.points.append((day, equity))

    def __len__(self) -> int:
        return len(self.points)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "equity"])
            for day, equity in self.points:
                writer.writerow([day.isoformat(), repr(equity)])


class DecisionSource(Protocol):
    def decide(self, ticker: str, day: date, day_index: int, store: MarketDataStore) -> Signal: ...


class StrategySource:
    """Adapts a rule-based strategy to the decision-source interface."""

    def __init__(self, strategy: Strategy):
        self.strategy = strategy

    def decide(self, ticker: str, day: date, day_index: int, store: MarketDataStore) -> Signal:
        bars = store.bars_as_of(ticker, day)
        return self.strategy.decide(bars, day_index)


def _fee(units: float, price: float, config: BacktestConfig) -> float:
    return abs(units) * price * config.cost_bps / 10_000.0


def apply_signal(
    portfolio: PortfolioState,
    signal: Signal,
    price: float,
    config: BacktestConfig,
    day: date,
) -> tuple[PortfolioState, TradeRecord | None]:
    """Execute one signal at `price`, returning the new portfolio state."""
    if price <= 0:
        raise ValueError(f"non-positive execution price {price}")
    units = portfolio.position_units
    equity = portfolio.cash + units * price

    def open_position(capital: float, sign: float) -> tuple[PortfolioState, float]:
        # Self-financing: size the position so notional + fee == capital.
        b = config.cost_bps / 10_000.0
        qty = capital / (price * (1.0 + b))
        fee = _fee(qty, price, config)
        if sign > 0:
            cash = capital - qty * price - fee
        else:
            cash = capital + qty * price - fee
        return PortfolioState(cash=cash, position_units=sign * qty, last_mark=price), qty

    def close_position() -> tuple[PortfolioState, float]:
        fee = _fee(units, price, config)
        cash = portfolio.cash + units * price - fee
        return PortfolioState(cash=cash, position_units=0.0, last_mark=price), abs(units)

    if signal is Signal.Hold:
        return replace(portfolio, last_mark=price), None

    if signal is Signal.Buy:
        if units > 0:
            return replace(portfolio, last_mark=price), None
        if units == 0:
            state, qty = open_position(equity, +1.0)
            return state, TradeRecord(day, "open_long", qty, price, _fee(qty, price, config))
        flat, closed = close_position()
        state, opened = open_position(flat.cash, +1.0)
        total = closed + opened
        return state, TradeRecord(day, "reverse", total, price, _fee(total, price, config))

    # Sell
    if units < 0:
        return replace(portfolio, last_mark=price), None
    if units == 0:
        if not config.allow_short:
            return replace(portfolio, last_mark=price), None
        state, qty = open_position(equity, -1.0)
        return state, TradeRecord(day, "open_short", qty, price, _fee(qty, price, config))
    if not config.allow_short:
        state, closed = close_position()
        return state, TradeRecord(day, "close", closed, price, _fee(closed, price, config))
    flat, closed = close_position()
    state, opened = open_position(flat.cash, -1.0)
    total = closed + opened
    return state, TradeRecord(day, "reverse", total, price, _fee(total, price, config))


@dataclass
class BacktestReport:
    ticker: str
    config: BacktestConfig
    trades: list[TradeRecord]
    equity_curve: EquityCurve
    metrics: MetricsReport | None

    def write_trades_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "action", "units", "price", "cost"])
            for t in self.trades:
                writer.writerow([t.date.isoformat(), t.action, repr(t.units), repr(t.price), repr(t.cost)])

    def write_metrics_json(self, path: str | Path) -> None:
        payload = self.metrics.to_dict() if self.metrics is not None else None
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_backtest(
    decision_source: DecisionSource,
    ticker: str,
    start: date,
    end: date,
    store: MarketDataStore,
    config: BacktestConfig | None = None,
    rf_annual: float = 0.0,
) -> BacktestReport:
    """Run one single-asset backtest over the store's trading days in [start, end]."""
    config = config or BacktestConfig()
    if start > end:
        raise BacktestError(f"start {start} after end {end}")
    days = store.trading_days(ticker, start, end)
    if not days:
        raise BacktestError(f"no trading days for {ticker} in [{start}, {end}]")

    clock = SimulationClock()
    store.attach_clock(clock)
    portfolio = PortfolioState(cash=config.initial_capital)
    trades: list[TradeRecord] = []
    curve = EquityCurve()
    try:
        for day_index, day in enumerate(days):
            clock.set_day(day)
            try:
                signal = decision_source.decide(ticker, day, day_index, store)
            except Exception as exc:
                raise BacktestError(f"decision source failed on {day}: {exc}") from exc
            close = store.bars_as_of(ticker, day, lookback=1)[-1].close
            portfolio, trade = apply_signal(portfolio, signal, close, config, day)
            if trade is not None:
                trades.append(trade)
            curve.append(day, portfolio.equity(close))
    finally:
        store.detach_clock()

    metrics = compute_report(curve.values, rf_annual) if len(curve) >= 2 else None
    return BacktestReport(ticker=ticker, config=config, trades=trades, equity_curve=curve, metrics=metrics)
