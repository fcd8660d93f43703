"""Pure technical-indicator kernels over ascending daily bars.

Every function takes an ascending list of `Bar` and returns one or more
`IndicatorSeries` aligned 1:1 with the input; points inside the warm-up
window are `None`, never fabricated.  Unless noted otherwise the first
``period - 1`` points are undefined.

Conventions (fixed so an independent oracle can reproduce every value):

* RSI, ATR and ADX use Wilder smoothing: the recursive average
  ``a_t = a_{t-1} + (x_t - a_{t-1}) / period`` seeded with the plain mean
  of the first ``period`` inputs.
* RSI consumes close-to-close differences, so its first defined point is
  at index ``period`` (one later than the blanket rule).
* ADX needs a second smoothing pass and is first defined at index
  ``2 * period - 1``.
* Bollinger bands use the population standard deviation.
* Degenerate denominators: a flat KDJ window yields RSV = 50, a zero
  directional sum yields DX = 0, and a zero mean absolute deviation makes
  the CCI point undefined.  A zero-volume VWMA window is undefined.
* RSI over a perfectly flat history (no gains, no losses) is 50.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Sequence

from .marketdata import Bar


@dataclass
class IndicatorSeries:
    """Named, parameterized series aligned to the input bars."""

    name: str
    params: dict[str, float]
    points: list[tuple[date, float | None]] = field(default_factory=list)

    def values(self) -> list[float | None]:
        return [v for _, v in self.points]

    def value_at(self, i: int) -> float | None:
        return self.points[i][1]

    def __len__(self) -> int:
        return len(self.points)


def _series(name: str, params: dict[str, float], bars: Sequence[Bar], values: list[float | None]) -> IndicatorSeries:
    assert len(values) == len(bars)
    return IndicatorSeries(name, params, [(b.date, v) for b, v in zip(bars, values)])


def _check_period(period: int) -> None:
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")


def _wilder(values: list[float | None], period: int, first: int) -> list[float | None]:
    """Wilder-smooth `values`, whose entries are defined from index `first`.

    The seed at index ``first + period - 1`` is the mean of the first
    `period` defined values; afterwards a_t = a_{t-1} + (x_t - a_{t-1})/period.
    """
    out: list[float | None] = [None] * len(values)
    seed_at = first + period - 1
    if seed_at >= len(values):
        return out
    window = [values[i] for i in range(first, seed_at + 1)]
    acc = sum(window) / period
    out[seed_at] = acc
    for i in range(seed_at + 1, len(values)):
        acc = acc + (values[i] - acc) / period
        out[i] = acc
    return out


def sma(bars: Sequence[Bar], period: int = 20) -> IndicatorSeries:
    """Arithmetic mean of closes over the trailing window."""
    _check_period(period)
    closes = [b.close for b in bars]
    values: list[float | None] = [None] * len(bars)
    for i in range(period - 1, len(bars)):
        values[i] = sum(closes[i - period + 1 : i + 1]) / period
    return _series("sma", {"period": period}, bars, values)


def ema(bars: Sequence[Bar], period: int = 20) -> IndicatorSeries:
    """Exponential moving average, seeded with the SMA of the first window."""
    _check_period(period)
    closes = [b.close for b in bars]
    values: list[float | None] = [None] * len(bars)
    if len(bars) >= period:
        alpha = 2.0 / (period + 1)
        acc = sum(closes[:period]) / period
        values[period - 1] = acc
        for i in range(period, len(bars)):
            acc = alpha * closes[i] + (1 - alpha) * acc
            values[i] = acc
    return _series("ema", {"period": period}, bars, values)


def macd(bars: Sequence[Bar], fast: int = 12, slow: int = 26, signal: int = 9) -> tuple[IndicatorSeries, IndicatorSeries, IndicatorSeries]:
    """MACD line, signal line and histogram.

    The MACD line is ema(fast) - ema(slow), defined from index ``slow - 1``;
    the signal line is an EMA of the MACD line seeded with the mean of its
    first `signal` defined values.
    """
    _check_period(fast)
    _check_period(signal)
    if fast >= slow:
        raise ValueError(f"fast period {fast} must be < slow period {slow}")
    fast_line = ema(bars, fast).values()
    slow_line = ema(bars, slow).values()
    n = len(bars)
    macd_vals: list[float | None] = [None] * n
    for i in range(slow - 1, n):
        macd_vals[i] = fast_line[i] - slow_line[i]
    sig_vals: list[float | None] = [None] * n
    seed_at = slow - 1 + signal - 1
    if seed_at < n:
        alpha = 2.0 / (signal + 1)
        acc = sum(macd_vals[slow - 1 : seed_at + 1]) / signal
        sig_vals[seed_at] = acc
        for i in range(seed_at + 1, n):
            acc = alpha * macd_vals[i] + (1 - alpha) * acc
            sig_vals[i] = acc
    hist_vals: list[float | None] = [
        None if s is None else m - s for m, s in zip(macd_vals, sig_vals)
    ]
    params = {"fast": fast, "slow": slow, "signal": signal}
    return (
        _series("macd", params, bars, macd_vals),
        _series("macd_signal", params, bars, sig_vals),
        _series("macd_histogram", params, bars, hist_vals),
    )


def rsi(bars: Sequence[Bar], period: int = 14) -> IndicatorSeries:
    """Relative strength index with Wilder-smoothed average gain/loss."""
    _check_period(period)
    n = len(bars)
    closes = [b.close for b in bars]
    gains: list[float | None] = [None] * n
    losses: list[float | None] = [None] * n
    for i in range(1, n):
        d = closes[i] - closes[i - 1]
        gains[i] = max(d, 0.0)
        losses[i] = max(-d, 0.0)
    avg_gain = _wilder(gains, period, first=1)
    avg_loss = _wilder(losses, period, first=1)
    values: list[float | None] = [None] * n
    for i in range(n):
        g, l = avg_gain[i], avg_loss[i]
        if g is None or l is None:
            continue
        if l == 0.0:
            values[i] = 50.0 if g == 0.0 else 100.0
        else:
            values[i] = 100.0 - 100.0 / (1.0 + g / l)
    return _series("rsi", {"period": period}, bars, values)


def kdj(bars: Sequence[Bar], period: int = 9, k_smooth: int = 3, d_smooth: int = 3) -> tuple[IndicatorSeries, IndicatorSeries, IndicatorSeries]:
    """Stochastic oscillator triple K, D, J = 3K - 2D.

    RSV is the close's position in the window's high-low range (50 on a
    flat window); K and D use the 1/k_smooth recursive average seeded at 50.
    """
    _check_period(period)
    _check_period(k_smooth)
    _check_period(d_smooth)
    n = len(bars)
    k_vals: list[float | None] = [None] * n
    d_vals: list[float | None] = [None] * n
    j_vals: list[float | None] = [None] * n
    k_prev, d_prev = 50.0, 50.0
    for i in range(period - 1, n):
        window = bars[i - period + 1 : i + 1]
        hh = max(b.high for b in window)
        ll = min(b.low for b in window)
        rsv = 50.0 if hh == ll else 100.0 * (bars[i].close - ll) / (hh - ll)
        k = k_prev + (rsv - k_prev) / k_smooth
        d = d_prev + (k - d_prev) / d_smooth
        k_vals[i], d_vals[i], j_vals[i] = k, d, 3.0 * k - 2.0 * d
        k_prev, d_prev = k, d
    params = {"period": period, "k_smooth": k_smooth, "d_smooth": d_smooth}
    return (
        _series("kdj_k", params, bars, k_vals),
        _series("kdj_d", params, bars, d_vals),
        _series("kdj_j", params, bars, j_vals),
    )


def bollinger(bars: Sequence[Bar], period: int = 20, width: float = 2.0) -> tuple[IndicatorSeries, IndicatorSeries, IndicatorSeries]:
    """Bollinger bands: SMA middle, +- width population stddevs."""
    _check_period(period)
    n = len(bars)
    closes = [b.close for b in bars]
    upper: list[float | None] = [None] * n
    middle: list[float | None] = [None] * n
    lower: list[float | None] = [None] * n
    for i in range(period - 1, n):
        window = closes[i - period + 1 : i + 1]
        m = sum(window) / period
        var = sum((c - m) ** 2 for c in window) / period
        sd = var**0.5
        middle[i] = m
        upper[i] = m + width * sd
        lower[i] = m - width * sd
    params = {"period": period, "width": width}
    return (
        _series("boll_upper", params, bars, upper),
        _series("boll_middle", params, bars, middle),
        _series("boll_lower", params, bars, lower),
    )


def _true_ranges(bars: Sequence[Bar]) -> list[float]:
    # TR_0 has no previous close and falls back to the day's range.
    trs = [bars[0].high - bars[0].low] if bars else []
    for i in range(1, len(bars)):
        pc = bars[i - 1].close
        trs.append(max(bars[i].high - bars[i].low, abs(bars[i].high - pc), abs(bars[i].low - pc)))
    return trs


def atr(bars: Sequence[Bar], period: int = 14) -> IndicatorSeries:
    """Average true range, Wilder-smoothed."""
    _check_period(period)
    trs: list[float | None] = list(_true_ranges(bars))
    values = _wilder(trs, period, first=0)
    return _series("atr", {"period": period}, bars, values)


def adx(bars: Sequence[Bar], period: int = 14) -> IndicatorSeries:
    """Average directional index; first defined at index 2*period - 1."""
    _check_period(period)
    n = len(bars)
    plus_dm: list[float | None] = [None] * n
    minus_dm: list[float | None] = [None] * n
    trs: list[float | None] = [None] * n
    all_trs = _true_ranges(bars)
    for i in range(1, n):
        up = bars[i].high - bars[i - 1].high
        dn = bars[i - 1].low - bars[i].low
        plus_dm[i] = up if (up > dn and up > 0) else 0.0
        minus_dm[i] = dn if (dn > up and dn > 0) else 0.0
        trs[i] = all_trs[i]
    sm_plus = _wilder(plus_dm, period, first=1)
    sm_minus = _wilder(minus_dm, period, first=1)
    sm_tr = _wilder(trs, period, first=1)
    dx: list[float | None] = [None] * n
    for i in range(n):
        if sm_tr[i] is None:
            continue
        if sm_tr[i] == 0.0:
            plus_di = minus_di = 0.0
        else:
            plus_di = 100.0 * sm_plus[i] / sm_tr[i]
            minus_di = 100.0 * sm_minus[i] / sm_tr[i]
        total = plus_di + minus_di
        dx[i] = 0.0 if total == 0.0 else 100.0 * abs(plus_di - minus_di) / total
    values = _wilder(dx, period, first=period)
    return _series("adx", {"period": period}, bars, values)


def cci(bars: Sequence[Bar], period: int = 14) -> IndicatorSeries:
    """Commodity channel index over typical price (H+L+C)/3."""
    _check_period(period)
    n = len(bars)
    tp = [(b.high + b.low + b.close) / 3.0 for b in bars]
    values: list[float | None] = [None] * n
    for i in range(period - 1, n):
        window = tp[i - period + 1 : i + 1]
        m = sum(window) / period
        mad = sum(abs(x - m) for x in window) / period
        if mad == 0.0:
            continue
        values[i] = (tp[i] - m) / (0.015 * mad)
    return _series("cci", {"period": period}, bars, values)


def vwma(bars: Sequence[Bar], period: int = 14) -> IndicatorSeries:
    """Volume-weighted moving average of closes."""
    _check_period(period)
    n = len(bars)
    values: list[float | None] = [None] * n
    for i in range(period - 1, n):
        window = bars[i - period + 1 : i + 1]
        sv = sum(b.volume for b in window)
        if sv == 0:
            continue
        values[i] = sum(b.close * b.volume for b in window) / sv
    return _series("vwma", {"period": period}, bars, values)


def supertrend(bars: Sequence[Bar], period: int = 10, multiplier: float = 3.0) -> tuple[IndicatorSeries, IndicatorSeries]:
    """Supertrend active band plus a +1/-1 direction series.

    Basic bands are (H+L)/2 +- multiplier * ATR(period) with the usual
    band ratchet; direction flips when the close crosses the active band.
    At the first defined bar the direction is +1 when the close is at or
    above the (H+L)/2 midline, else -1.
    """
    _check_period(period)
    n = len(bars)
    atr_vals = atr(bars, period).values()
    st_vals: list[float | None] = [None] * n
    dir_vals: list[float | None] = [None] * n
    start = period - 1
    if start >= n:
        params = {"period": period, "multiplier": multiplier}
        return (_series("supertrend", params, bars, st_vals), _series("supertrend_direction", params, bars, dir_vals))
    fub = flb = 0.0
    direction = 1.0
    for i in range(start, n):
        mid = (bars[i].high + bars[i].low) / 2.0
        bub = mid + multiplier * atr_vals[i]
        blb = mid - multiplier * atr_vals[i]
        if i == start:
            fub, flb = bub, blb
            direction = 1.0 if bars[i].close >= mid else -1.0
        else:
            prev_close = bars[i - 1].close
            fub = bub if (bub < fub or prev_close > fub) else fub
            flb = blb if (blb > flb or prev_close < flb) else flb
            if direction > 0:
                direction = -1.0 if bars[i].close < flb else 1.0
            else:
                direction = 1.0 if bars[i].close > fub else -1.0
        dir_vals[i] = direction
        st_vals[i] = flb if direction > 0 else fub
    params = {"period": period, "multiplier": multiplier}
    return (
        _series("supertrend", params, bars, st_vals),
        _series("supertrend_direction", params, bars, dir_vals),
    )


# Vocabulary accepted by the indicator-report tool and CLI flags.  Values are
# (callable, names of the series it produces).
INDICATORS: dict[str, tuple] = {
    "sma": (sma, ("sma",)),
    "ema": (ema, ("ema",)),
    "macd": (macd, ("macd", "macd_signal", "macd_histogram")),
    "rsi": (rsi, ("rsi",)),
    "kdj": (kdj, ("kdj_k", "kdj_d", "kdj_j")),
    "boll": (bollinger, ("boll_upper", "boll_middle", "boll_lower")),
    "atr": (atr, ("atr",)),
    "adx": (adx, ("adx",)),
    "cci": (cci, ("cci",)),
    "vwma": (vwma, ("vwma",)),
    "supertrend": (supertrend, ("supertrend", "supertrend_direction")),
}


def compute(name: str, bars: Sequence[Bar], **params) -> list[IndicatorSeries]:
    """Compute a registered indicator by name; returns its series as a list."""
    if name not in INDICATORS:
        raise ValueError(f"unknown indicator {name!r}; known: {', '.join(sorted(INDICATORS))}")
    fn, _ = INDICATORS[name]
    out = fn(bars, **params)
    return list(out) if isinstance(out, tuple) else [out]
