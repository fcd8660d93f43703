"""The five rule-based baseline strategies.

Each strategy maps the bars available up to and including the current
trading day (plus the day's index within the simulation) to a Buy, Sell
or Hold signal.  Strategies are pure: the same history and config always
produce the same signal, and days with insufficient history yield Hold.

Crossover semantics: a cross requires strict inequality on both sides of
the step (lines that touch do not cross).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum
from typing import Sequence

from . import indicators
from .marketdata import Bar


class Signal(str, Enum):
    Buy = "Buy"
    Sell = "Sell"
    Hold = "Hold"


def _crossover(prev_a: float, prev_b: float, cur_a: float, cur_b: float) -> Signal:
    if prev_a < prev_b and cur_a > cur_b:
        return Signal.Buy
    if prev_a > prev_b and cur_a < cur_b:
        return Signal.Sell
    return Signal.Hold


class Strategy:
    """Base class; subclasses implement decide()."""

    name: str = ""

    def decide(self, bars: Sequence[Bar], day_index: int) -> Signal:
        raise NotImplementedError


@dataclass
class BuyAndHold(Strategy):
    """Buy on the first tradable day of the simulation, hold thereafter."""

    name = "buy_and_hold"

    def decide(self, bars: Sequence[Bar], day_index: int) -> Signal:
        return Signal.Buy if day_index == 0 else Signal.Hold


@dataclass
class MacdStrategy(Strategy):
    """Buy/sell on MACD line crossing the signal line."""

    fast: int = 12
    slow: int = 26
    signal: int = 9
    name = "macd"

    def __post_init__(self):
        if min(self.fast, self.signal) < 1:
            raise ValueError("macd periods must be >= 1")
        if self.fast >= self.slow:
            raise ValueError(f"fast period {self.fast} must be < slow period {self.slow}")

    def decide(self, bars: Sequence[Bar], day_index: int) -> Signal:
        macd_line, sig_line, _ = indicators.macd(bars, self.fast, self.slow, self.signal)
        if len(bars) < 2:
            return Signal.Hold
        m0, s0 = macd_line.value_at(-2), sig_line.value_at(-2)
        m1, s1 = macd_line.value_at(-1), sig_line.value_at(-1)
        if None in (m0, s0, m1, s1):
            return Signal.Hold
        return _crossover(m0, s0, m1, s1)


@dataclass
class KdjRsiStrategy(Strategy):
    """Buy when both RSI and J are oversold; sell when both are overbought."""

    rsi_period: int = 14
    kdj_period: int = 9
    k_smooth: int = 3
    d_smooth: int = 3
    rsi_buy: float = 30.0
    rsi_sell: float = 70.0
    j_buy: float = 20.0
    j_sell: float = 80.0
    name = "kdj_rsi"

    def __post_init__(self):
        if min(self.rsi_period, self.kdj_period, self.k_smooth, self.d_smooth) < 1:
            raise ValueError("kdj_rsi periods must be >= 1")

    def decide(self, bars: Sequence[Bar], day_index: int) -> Signal:
        rsi_series = indicators.rsi(bars, self.rsi_period)
        _, _, j_series = indicators.kdj(bars, self.kdj_period, self.k_smooth, self.d_smooth)
        if not bars:
            return Signal.Hold
        r, j = rsi_series.value_at(-1), j_series.value_at(-1)
        if r is None or j is None:
            return Signal.Hold
        if r < self.rsi_buy and j < self.j_buy:
            return Signal.Buy
        if r > self.rsi_sell and j > self.j_sell:
            return Signal.Sell
        return Signal.Hold


@dataclass
class ZmrStrategy(Strategy):
    """Mean reversion on the rolling z-score of the close.

    Buy when z <= -entry_z, sell when z >= +entry_z, hold inside the band
    (exit_z marks the reversion reference; flattening is position
    semantics, handled by the backtester).  A zero-stddev window holds.
    """

    window: int = 20
    entry_z: float = 2.0
    exit_z: float = 0.0
    name = "zmr"

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")

    def decide(self, bars: Sequence[Bar], day_index: int) -> Signal:
        if len(bars) < self.window:
            return Signal.Hold
        closes = [b.close for b in bars[-self.window :]]
        mean = sum(closes) / self.window
        var = sum((c - mean) ** 2 for c in closes) / self.window
        if var == 0.0:
            return Signal.Hold
        z = (closes[-1] - mean) / var**0.5
        if z <= -self.entry_z:
            return Signal.Buy
        if z >= self.entry_z:
            return Signal.Sell
        return Signal.Hold


@dataclass
class SmaStrategy(Strategy):
    """Buy/sell on the fast SMA crossing the slow SMA."""

    fast: int = 10
    slow: int = 30
    name = "sma"

    def __post_init__(self):
        if self.fast < 1:
            raise ValueError("sma periods must be >= 1")
        if self.fast >= self.slow:
            raise ValueError(f"fast period {self.fast} must be < slow period {self.slow}")

    def decide(self, bars: Sequence[Bar], day_index: int) -> Signal:
        fast_line = indicators.sma(bars, self.fast)
        slow_line = indicators.sma(bars, self.slow)
        if len(bars) < 2:
            return Signal.Hold
        f0, s0 = fast_line.value_at(-2), slow_line.value_at(-2)
        f1, s1 = fast_line.value_at(-1), slow_line.value_at(-1)
        if None in (f0, s0, f1, s1):
            return Signal.Hold
        return _crossover(f0, s0, f1, s1)


STRATEGIES = {
    "buy_and_hold": BuyAndHold,
    "macd": MacdStrategy,
    "kdj_rsi": KdjRsiStrategy,
    "zmr": ZmrStrategy,
    "sma": SmaStrategy,
}


def make_strategy(name: str, params: dict | None = None):
    """Instantiate a registered strategy, validating parameter names."""
    if name not in STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}; known: {', '.join(sorted(STRATEGIES))}")
    cls = STRATEGIES[name]
    params = dict(params or {})
    allowed = {f.name for f in fields(cls)}
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"strategy {name!r} does not accept parameters {sorted(unknown)}")
    return cls(**params)
