"""Command-line entry point: ingest data, run backtests, compare strategies.

Exit codes: 0 success, 1 runtime failure (a stage failed mid-run), 2
configuration or usage error (bad flags, bad config, missing files).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import date
from pathlib import Path

from .agents import AgentDecisionSource, AgentsConfig, PipelineStageError
from .backtest import BacktestConfig, BacktestError, BacktestReport, StrategySource, run_backtest
from .config import ConfigError, RunConfig, load_config, parse_param
from .llm import BackendError, HttpBackend, ModelTier, ScriptedBackend
from .llm import ConfigError as BackendConfigError
from .marketdata import DataError, MarketDataStore
from .strategies import make_strategy


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantdesk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="load data files and write a manifest")
    ingest.add_argument("paths", nargs="+", help="OHLCV CSVs (ticker from filename) and record JSONs")
    ingest.add_argument("--out", help="directory for manifest.json (default: print to stdout)")

    backtest = sub.add_parser("backtest", help="run one backtest per ticker")
    _add_run_flags(backtest)

    compare = sub.add_parser("compare", help="run several strategies on the same data")
    _add_run_flags(compare)
    compare.add_argument(
        "--strategy",
        dest="strategies",
        action="append",
        required=True,
        metavar="NAME",
        help="strategy to include (repeatable)",
    )
    return parser


def _add_run_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", help="TOML run configuration file")
    if cmd.prog.endswith("backtest"):
        cmd.add_argument("--strategy", help="baseline strategy name")
        cmd.add_argument("--agents", action="store_true", help="run the agent pipeline instead of a strategy")
        cmd.add_argument("--backend", choices=["scripted", "http"], help="agent chat backend")
        cmd.add_argument("--fixture", help="scripted backend fixture file")
    cmd.add_argument("--param", action="append", default=[], metavar="K=V", help="strategy parameter override")
    cmd.add_argument("--tickers", help="comma-separated ticker list")
    cmd.add_argument("--from", dest="from_date", metavar="DATE", help="simulation start (YYYY-MM-DD)")
    cmd.add_argument("--to", dest="to_date", metavar="DATE", help="simulation end (YYYY-MM-DD)")
    cmd.add_argument("--out", help="output directory")
    cmd.add_argument("--data", action="append", default=[], metavar="PATH", help="data file (repeatable)")


def _classify_and_load(store: MarketDataStore, path: str) -> tuple[str, str, int]:
    """Load one data file, returning (kind, ticker, records)."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"no such file: {p}")
    if p.suffix.lower() == ".csv":
        ticker = p.stem.upper()
        count = store.load_ohlcv(p, ticker)
        return "ohlcv", ticker, count
    if p.suffix.lower() == ".json":
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{p}: invalid JSON: {exc}") from None
        kind = doc.get("kind") if isinstance(doc, dict) else None
        loader = {
            "news": store.load_news,
            "sentiment": store.load_sentiment,
            "insider": store.load_insider,
            "fundamentals": store.load_fundamentals,
        }.get(kind)
        if loader is None:
            raise DataError(f"{p}: JSON document needs a 'kind' of news/sentiment/insider/fundamentals")
        return kind, str(doc.get("ticker", "")), loader(p)
    raise DataError(f"{p}: expected a .csv or .json data file")


def cmd_ingest(args) -> int:
    store = MarketDataStore()
    loaded: list[dict] = []
    for path in args.paths:
        kind, ticker, count = _classify_and_load(store, path)
        loaded.append({"path": str(path), "kind": kind, "ticker": ticker, "records": count})
    manifest = {"files": loaded, "tickers": {}}
    for ticker in store.tickers():
        start, end = store.span(ticker)
        manifest["tickers"][ticker] = {
            "span": [start.isoformat(), end.isoformat()],
            "counts": store.counts(ticker),
        }
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(text)
        print(f"wrote {out / 'manifest.json'}")
    else:
        sys.stdout.write(text)
    return 0


def _build_run_config(args, strategies_override: list[str] | None = None) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.tickers:
        cfg.tickers = [t.strip().upper() for t in args.tickers.split(",") if t.strip()]
    for flag, attr in (("from_date", "start"), ("to_date", "end")):
        value = getattr(args, flag)
        if value:
            try:
                setattr(cfg, attr, date.fromisoformat(value))
            except ValueError:
                raise ConfigError(f"--{flag.split('_')[0]} must be an ISO date, got {value!r}")
    if args.out:
        cfg.out = args.out
    for path in args.data:
        p = Path(path)
        if p.suffix.lower() == ".csv":
            cfg.data.ohlcv.append(path)
        else:
            kind = None
            if p.exists():
                try:
                    doc = json.loads(p.read_text())
                    kind = doc.get("kind") if isinstance(doc, dict) else None
                except json.JSONDecodeError:
                    kind = None
            if kind not in ("news", "sentiment", "insider", "fundamentals"):
                raise ConfigError(f"--data {path}: cannot classify (need .csv or JSON with 'kind')")
            getattr(cfg.data, kind).append(path)

    if strategies_override is None:
        # backtest mode flags
        if getattr(args, "agents", False):
            from .config import AgentsBlock

            cfg.strategy = None
            if cfg.agents is None:
                cfg.agents = AgentsBlock()
            if args.backend:
                cfg.agents.backend = args.backend
            if args.fixture:
                cfg.agents.fixture = args.fixture
        elif getattr(args, "strategy", None):
            from .config import StrategyBlock

            cfg.agents = None
            params = dict(cfg.strategy.params) if cfg.strategy and cfg.strategy.name == args.strategy else {}
            cfg.strategy = StrategyBlock(name=args.strategy, params=params)
        if cfg.strategy is not None:
            for p in args.param:
                key, value = parse_param(p)
                cfg.strategy.params[key] = value
    if strategies_override is None:
        cfg.validate()
    return cfg


def _load_store(cfg: RunConfig) -> MarketDataStore:
    store = MarketDataStore()
    for path in cfg.data.ohlcv:
        store.load_ohlcv(path, Path(path).stem.upper())
    for path in cfg.data.news:
        store.load_news(path)
    for path in cfg.data.sentiment:
        store.load_sentiment(path)
    for path in cfg.data.insider:
        store.load_insider(path)
    for path in cfg.data.fundamentals:
        store.load_fundamentals(path)
    return store


def _backtest_config(cfg: RunConfig) -> BacktestConfig:
    try:
        return BacktestConfig(
            initial_capital=cfg.backtest.capital,
            cost_bps=cfg.backtest.cost_bps,
            allow_short=cfg.backtest.allow_short,
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _make_source(cfg: RunConfig, ticker_out: Path | None):
    if cfg.strategy is not None:
        try:
            return StrategySource(make_strategy(cfg.strategy.name, cfg.strategy.params))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc))
    block = cfg.agents
    agents_config = AgentsConfig(
        research_rounds=block.research_rounds,
        risk_rounds=block.risk_rounds,
        max_steps=block.max_steps,
        quick=ModelTier("quick", block.quick_model),
        deep=ModelTier("deep", block.deep_model),
        concurrent_analysts=block.concurrent_analysts,
    )
    if block.backend == "scripted":
        backend = ScriptedBackend(block.fixture)
    else:
        backend = HttpBackend(block.endpoint, credential_env=block.credential_env)
    session_dir = ticker_out / "sessions" if ticker_out else None
    return AgentDecisionSource(agents_config, backend, session_dir=session_dir)


def _write_outputs(report: BacktestReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    report.write_trades_csv(out / "trades.csv")
    report.equity_curve.write_csv(out / "equity.csv")
    report.write_metrics_json(out / "metrics.json")


def _metrics_cells(report: BacktestReport) -> list[str]:
    m = report.metrics
    if m is None:
        return ["n/a"] * 4
    sr = "n/a" if m.sharpe_ratio is None else f"{m.sharpe_ratio:.4f}"
    return [f"{m.cumulative_return_pct:.4f}", f"{m.annualized_return_pct:.4f}", sr, f"{m.max_drawdown_pct:.4f}"]


def cmd_backtest(args) -> int:
    cfg = _build_run_config(args)
    if cfg.out is None:
        raise ConfigError("an output directory is required (--out or `out` in the config)")
    try:
        store = _load_store(cfg)
    except DataError as exc:
        raise ConfigError(str(exc))
    bt_config = _backtest_config(cfg)

    for ticker in cfg.tickers:
        ticker_out = Path(cfg.out) / ticker
        source = _make_source(cfg, ticker_out)
        try:
            report = run_backtest(source, ticker, cfg.start, cfg.end, store, bt_config, cfg.backtest.rf_annual)
        except BacktestError as exc:
            cause = exc.__cause__
            stage = f" (stage {cause.stage!r})" if isinstance(cause, PipelineStageError) else ""
            print(f"error: backtest for {ticker} failed{stage}: {exc}", file=sys.stderr)
            return 1
        _write_outputs(report, ticker_out)
        cells = _metrics_cells(report)
        print(f"{ticker}: CR%={cells[0]} AR%={cells[1]} SR={cells[2]} MDD%={cells[3]} trades={len(report.trades)}")
    return 0


def cmd_compare(args) -> int:
    if not args.strategies:
        raise ConfigError("compare requires at least one --strategy")
    if args.param:
        raise ConfigError("--param applies to `backtest`; compare runs each strategy with its defaults")
    cfg = _build_run_config(args, strategies_override=args.strategies)
    if not cfg.tickers:
        raise ConfigError("no tickers configured")
    if cfg.start is None or cfg.end is None:
        raise ConfigError("both --from and --to are required")
    for group, paths in vars(cfg.data).items():
        for p in paths:
            if not Path(p).exists():
                raise ConfigError(f"{group} path does not exist: {p}")
    try:
        store = _load_store(cfg)
    except DataError as exc:
        raise ConfigError(str(exc))
    bt_config = _backtest_config(cfg)

    rows: list[list[str]] = []
    for name in args.strategies:
        try:
            source = StrategySource(make_strategy(name))
        except ValueError as exc:
            raise ConfigError(str(exc))
        for ticker in cfg.tickers:
            try:
                report = run_backtest(source, ticker, cfg.start, cfg.end, store, bt_config, cfg.backtest.rf_annual)
            except BacktestError as exc:
                print(f"error: {name} on {ticker} failed: {exc}", file=sys.stderr)
                return 1
            label = name if len(cfg.tickers) == 1 else f"{name}:{ticker}"
            rows.append([label, *_metrics_cells(report)])

    header = ["strategy", "CR%", "AR%", "SR", "MDD%"]
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    print(fmt.format(*header))
    for row in rows:
        print(fmt.format(*row))
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "comparison.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ingest":
            return cmd_ingest(args)
        if args.command == "backtest":
            return cmd_backtest(args)
        return cmd_compare(args)
    except (ConfigError, BackendConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BackendError, BacktestError, PipelineStageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
