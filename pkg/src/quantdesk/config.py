"""Run configuration: a TOML-style file fully overridable by CLI flags.

Python 3.10 has no stdlib TOML reader, so `read_toml_subset` parses the
documented subset these configs use: ``#`` comments, ``[table]`` /
``[table.sub]`` headers, and ``key = value`` pairs whose values are quoted
strings, integers, floats, booleans, ISO dates, or single-line arrays of
those scalars.  Multi-line values, inline tables, and arrays of tables are
not supported.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path


class ConfigError(Exception):
    pass


_TABLE_RE = re.compile(r"^\[([A-Za-z0-9_.-]+)\]$")
_KEY_RE = re.compile(r"^([A-Za-z0-9_-]+)\s*=\s*(.+)$")


def _parse_scalar(token: str, lineno: int):
    token = token.strip()
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    if token.startswith("'") and token.endswith("'") and len(token) >= 2:
        return token[1:-1]
    if token == "true":
        return True
    if token == "false":
        return False
    if re.fullmatch(r"\d{4}-\d{2}-\d{2}", token):
        return date.fromisoformat(token)
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    raise ConfigError(f"line {lineno}: cannot parse value {token!r}")


def _split_array_items(body: str, lineno: int) -> list[str]:
    items, depth, current, quote = [], 0, "", None
    for ch in body:
        if quote:
            current += ch
            if ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
            current += ch
        elif ch == "[":
            raise ConfigError(f"line {lineno}: nested arrays are not supported")
        elif ch == ",":
            items.append(current)
            current = ""
        else:
            current += ch
    if quote:
        raise ConfigError(f"line {lineno}: unterminated string")
    if current.strip():
        items.append(current)
    return [i for i in items if i.strip()]


def read_toml_subset(text: str) -> dict:
    """Parse the documented TOML subset into nested dicts."""
    root: dict = {}
    table = root
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _TABLE_RE.match(line)
        if m:
            table = root
            for part in m.group(1).split("."):
                nxt = table.setdefault(part, {})
                if not isinstance(nxt, dict):
                    raise ConfigError(f"line {lineno}: {part!r} is already a value, not a table")
                table = nxt
            continue
        m = _KEY_RE.match(line)
        if not m:
            raise ConfigError(f"line {lineno}: expected `key = value` or `[table]`, got {line!r}")
        key, value = m.group(1), m.group(2).strip()
        comment_split = re.split(r"\s+#", value, maxsplit=1)
        value = comment_split[0].strip()
        if value.startswith("["):
            if not value.endswith("]"):
                raise ConfigError(f"line {lineno}: arrays must close on the same line")
            table[key] = [_parse_scalar(i, lineno) for i in _split_array_items(value[1:-1], lineno)]
        else:
            table[key] = _parse_scalar(value, lineno)
    return root


@dataclass
class StrategyBlock:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class AgentsBlock:
    backend: str = "scripted"  # scripted | http
    fixture: str | None = None
    research_rounds: int = 2
    risk_rounds: int = 1
    max_steps: int = 12
    quick_model: str = "quick-default"
    deep_model: str = "deep-default"
    concurrent_analysts: bool = False
    endpoint: str = "https://api.openai.com/v1"
    credential_env: str = "QUANTDESK_API_KEY"


@dataclass
class BacktestBlock:
    capital: float = 100_000.0
    cost_bps: float = 0.0
    allow_short: bool = True
    rf_annual: float = 0.0


@dataclass
class DataBlock:
    ohlcv: list[str] = field(default_factory=list)
    news: list[str] = field(default_factory=list)
    sentiment: list[str] = field(default_factory=list)
    insider: list[str] = field(default_factory=list)
    fundamentals: list[str] = field(default_factory=list)


@dataclass
class RunConfig:
    tickers: list[str] = field(default_factory=list)
    start: date | None = None
    end: date | None = None
    out: str | None = None
    strategy: StrategyBlock | None = None
    agents: AgentsBlock | None = None
    backtest: BacktestBlock = field(default_factory=BacktestBlock)
    data: DataBlock = field(default_factory=DataBlock)

    def validate(self) -> None:
        if not self.tickers:
            raise ConfigError("no tickers configured")
        if self.start is None or self.end is None:
            raise ConfigError("both `from` and `to` dates are required")
        if self.start > self.end:
            raise ConfigError(f"`from` {self.start} is after `to` {self.end}")
        if (self.strategy is None) == (self.agents is None):
            raise ConfigError("exactly one of [strategy] or [agents] must be configured")
        if self.agents is not None:
            if self.agents.backend not in ("scripted", "http"):
                raise ConfigError(f"agents backend must be 'scripted' or 'http', got {self.agents.backend!r}")
            if self.agents.backend == "scripted" and not self.agents.fixture:
                raise ConfigError("scripted backend requires a fixture path")
        for group, paths in vars(self.data).items():
            for p in paths:
                if not Path(p).exists():
                    raise ConfigError(f"{group} path does not exist: {p}")


def _coerce_block(cls, mapping: dict, where: str):
    allowed = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    return cls(**mapping)


def config_from_dict(doc: dict) -> RunConfig:
    cfg = RunConfig()
    known = {"tickers", "from", "to", "out", "strategy", "agents", "backtest", "data"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    cfg.tickers = [str(t) for t in doc.get("tickers", [])]
    for src_key, attr in (("from", "start"), ("to", "end")):
        if src_key in doc:
            value = doc[src_key]
            if not isinstance(value, date):
                raise ConfigError(f"`{src_key}` must be an ISO date, got {value!r}")
            setattr(cfg, attr, value)
    if "out" in doc:
        cfg.out = str(doc["out"])
    if "strategy" in doc:
        block = dict(doc["strategy"])
        params = block.pop("params", {})
        if "name" not in block:
            raise ConfigError("[strategy] requires a `name`")
        extra = set(block) - {"name"}
        if extra:
            raise ConfigError(f"unknown [strategy] keys: {sorted(extra)} (put parameters in [strategy.params])")
        cfg.strategy = StrategyBlock(name=block["name"], params=dict(params))
    if "agents" in doc:
        cfg.agents = _coerce_block(AgentsBlock, dict(doc["agents"]), "[agents]")
    if "backtest" in doc:
        cfg.backtest = _coerce_block(BacktestBlock, dict(doc["backtest"]), "[backtest]")
    if "data" in doc:
        data = dict(doc["data"])
        for key, value in data.items():
            data[key] = [str(v) for v in value]
        cfg.data = _coerce_block(DataBlock, data, "[data]")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        doc = read_toml_subset(path.read_text())
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc)


def parse_param(text: str) -> tuple[str, object]:
    """Parse one `--param key=value` flag; values coerce like config scalars."""
    if "=" not in text:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    raw = raw.strip()
    if not key:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    for caster in (int, float):
        try:
            return key, caster(raw)
        except ValueError:
            continue
    if raw in ("true", "false"):
        return key, raw == "true"
    return key, raw
