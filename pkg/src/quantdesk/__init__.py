"""quantdesk: deterministic daily-bar backtesting plus a multi-agent trading desk.

The package is organized around a strict no-lookahead market data store
(`marketdata`), pure indicator kernels (`indicators`), five rule-based
baseline strategies (`strategies`), a structured per-day communication
protocol for the agent pipeline (`protocol`, `agents`, `tools`, `llm`),
a daily-stepped backtester (`backtest`), and the four standard evaluation
metrics (`metrics`).  The `cli` module exposes ingest/backtest/compare
commands.
"""

__version__ = "0.1.0"
