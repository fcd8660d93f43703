"""Evaluation metrics over an equity curve: CR, AR, Sharpe, max drawdown.

All functions take the equity values (currency units, one per trading day)
in chronological order.  Year lengths are measured in trading days over a
configurable base (default 252), so a curve spanning 253 points counts as
exactly one year of daily steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

TRADING_DAYS_PER_YEAR = 252


class ZeroVolatilityError(ValueError):
    """Daily returns have zero standard deviation; the Sharpe ratio is undefined."""


def cumulative_return(values: Sequence[float]) -> float:
    """Total return over the run, in percent: (V_end - V_start) / V_start * 100."""
    if len(values) < 2:
        raise ValueError(f"need at least 2 equity points, got {len(values)}")
    start, end = values[0], values[-1]
    if start <= 0:
        raise ValueError(f"starting equity must be positive, got {start}")
    return (end - start) / start * 100.0


def annualized_return(values: Sequence[float], trading_days_per_year: int = TRADING_DAYS_PER_YEAR) -> float:
    """Geometric annual growth rate, in percent.

    The number of years N is (len(values) - 1) / trading_days_per_year.
    """
    if len(values) < 2:
        raise ValueError(f"need at least 2 equity points, got {len(values)}")
    start, end = values[0], values[-1]
    if start <= 0:
        raise ValueError(f"starting equity must be positive, got {start}")
    if end <= 0:
        raise ValueError(f"ending equity must be positive to annualize, got {end}")
    n_years = (len(values) - 1) / trading_days_per_year
    return ((end / start) ** (1.0 / n_years) - 1.0) * 100.0


def daily_returns(values: Sequence[float]) -> list[float]:
    return [values[i] / values[i - 1] - 1.0 for i in range(1, len(values))]


def sharpe_ratio(
    values: Sequence[float],
    rf_annual: float = 0.0,
    trading_days_per_year: int = TRADING_DAYS_PER_YEAR,
) -> tuple[float, float]:
    """(raw, annualized) Sharpe ratio of daily returns.

    raw = (mean(r) - rf_daily) / sample_stddev(r) with
    rf_daily = (1 + rf_annual)^(1/trading_days_per_year) - 1; annualized
    multiplies by sqrt(trading_days_per_year).  Flat returns raise
    ZeroVolatilityError rather than yielding an infinity.
    """
    if len(values) < 3:
        raise ValueError(f"need at least 3 equity points (2 returns), got {len(values)}")
    rets = daily_returns(values)
    mean = sum(rets) / len(rets)
    var = sum((r - mean) ** 2 for r in rets) / (len(rets) - 1)
    sd = math.sqrt(var)
    if sd == 0.0:
        raise ZeroVolatilityError("daily returns are constant; Sharpe ratio undefined")
    rf_daily = (1.0 + rf_annual) ** (1.0 / trading_days_per_year) - 1.0
    raw = (mean - rf_daily) / sd
    return raw, raw * math.sqrt(trading_days_per_year)


def max_drawdown(values: Sequence[float]) -> float:
    """Largest peak-to-trough decline, in percent, via a running peak."""
    if not values:
        raise ValueError("empty equity curve")
    peak = values[0]
    worst = 0.0
    for v in values:
        if v > peak:
            peak = v
        dd = (peak - v) / peak * 100.0
        if dd > worst:
            worst = dd
    return worst


@dataclass
class MetricsReport:
    """The four metrics plus the conventions they were computed under.

    Sharpe fields are None when the curve is too short or has zero
    volatility (a flat, hold-only run).
    """

    cumulative_return_pct: float
    annualized_return_pct: float
    sharpe_ratio: float | None
    sharpe_annualized: float | None
    max_drawdown_pct: float
    n_years: float
    risk_free_rate_annual: float

    def to_dict(self) -> dict:
        return {
            "cumulative_return_pct": self.cumulative_return_pct,
            "annualized_return_pct": self.annualized_return_pct,
            "sharpe_ratio": self.sharpe_ratio,
            "sharpe_annualized": self.sharpe_annualized,
            "max_drawdown_pct": self.max_drawdown_pct,
            "n_years": self.n_years,
            "risk_free_rate_annual": self.risk_free_rate_annual,
        }


def compute_report(
    values: Sequence[float],
    rf_annual: float = 0.0,
    trading_days_per_year: int = TRADING_DAYS_PER_YEAR,
) -> MetricsReport:
    """Evaluate all four metrics over one equity curve."""
    cr = cumulative_return(values)
    ar = annualized_return(values, trading_days_per_year)
    try:
        raw, ann = sharpe_ratio(values, rf_annual, trading_days_per_year)
    except ValueError:  # zero volatility or too few points
        raw, ann = None, None
    return MetricsReport(
        cumulative_return_pct=cr,
        annualized_return_pct=ar,
        sharpe_ratio=raw,
        sharpe_annualized=ann,
        max_drawdown_pct=max_drawdown(values),
        n_years=(len(values) - 1) / trading_days_per_year,
        risk_free_rate_annual=rf_annual,
    )
