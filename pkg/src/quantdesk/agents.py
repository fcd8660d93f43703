"""The per-day agent pipeline: analysts, debates, trader, risk, fund manager.

Stage order for one (ticker, day): four analysts run ReAct tool loops and
fill their report slots (optionally in parallel); bull and bear researchers
debate for n rounds and a facilitator records the prevailing perspective;
the trader decides; risky/safe/neutral analysts debate the decision for n
rounds and a facilitator records the adjusted plan; the fund manager issues
the final decision.  Any stage failure aborts the day with an error naming
the stage.

Wire conventions (the model-facing text contracts):

* Traders and the fund manager end their answer with a line
  ``FINAL DECISION: BUY|SELL|HOLD``; the last matching line wins.  One
  reprompt with a format reminder is allowed before a hard parse error.
* Facilitators end with ``VERDICT: BULL|BEAR`` (investment debate) or
  ``VERDICT: RISKY|SAFE|NEUTRAL`` (risk debate); same reprompt policy.

Prompt text lives in external templates under ``quantdesk/prompts/`` keyed
by role, so scripted fixtures and live runs share the same scaffolding.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path

from .llm import Backend, ChatMessage, CompletionRequest, ModelTier
from .marketdata import MarketDataStore
from .protocol import (
    Decision,
    GlobalState,
    Report,
    Role,
    SLOT_OWNERS,
    StageGateError,
    ToolCallRecord,
    new_day_state,
    record_utterance,
    record_verdict,
    set_final_decision,
    set_trader_decision,
    state_to_json,
    write_report,
)
from .strategies import Signal
from .tools import ToolContext, ToolRegistry, default_registry


class AgentError(Exception):
    pass


class AgentLoopError(AgentError):
    pass


class DecisionParseError(AgentError):
    pass


class PipelineStageError(AgentError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


logger = logging.getLogger(__name__)

_SLOT_FOR_ROLE = {owner: slot for slot, owner in SLOT_OWNERS.items()}

_DECISION_RE = re.compile(r"FINAL DECISION:\s*(BUY|SELL|HOLD)\b", re.IGNORECASE)
_VERDICT_RE = re.compile(r"VERDICT:\s*([A-Z]+)\b", re.IGNORECASE)

_TEMPLATE_FOR_ROLE = {
    Role.TechnicalAnalyst: "technical_analyst",
    Role.SentimentAnalyst: "sentiment_analyst",
    Role.NewsAnalyst: "news_analyst",
    Role.FundamentalsAnalyst: "fundamentals_analyst",
    Role.BullResearcher: "bull_researcher",
    Role.BearResearcher: "bear_researcher",
    Role.Trader: "trader",
    Role.RiskyAnalyst: "risky_analyst",
    Role.SafeAnalyst: "safe_analyst",
    Role.NeutralAnalyst: "neutral_analyst",
    Role.FundManager: "fund_manager",
}


@dataclass(frozen=True)
class AgentSpec:
    name: str
    role: Role
    goal: str
    constraints: tuple[str, ...]
    tools: tuple[str, ...]
    tier: ModelTier


@dataclass
class AgentsConfig:
    research_rounds: int = 2
    risk_rounds: int = 1
    max_steps: int = 12
    quick: ModelTier = field(default_factory=lambda: ModelTier("quick", "quick-default"))
    deep: ModelTier = field(default_factory=lambda: ModelTier("deep", "deep-default"))
    concurrent_analysts: bool = False
    # Tool observations longer than this are condensed through a quick-tier
    # summarization call before entering the transcript; None disables it.
    summarize_over_chars: int | None = None

    def __post_init__(self):
        if self.research_rounds < 1 or self.risk_rounds < 1:
            raise ValueError("debate rounds must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


def load_template(name: str) -> str:
    return resources.files("quantdesk").joinpath("prompts", f"{name}.txt").read_text()


def default_agent_specs(config: AgentsConfig) -> dict[Role, AgentSpec]:
    """The standard desk: per-role names, goals, constraints, and tool kits."""
    deep = config.deep

    def spec(name, role, goal, constraints, tools=()):
        return AgentSpec(name, role, goal, tuple(constraints), tuple(tools), deep)

    no_future = "Use only information dated on or before the current trading day."
    concise = "Keep the output concise and well organized."
    return {
        s.role: s
        for s in [
            spec(
                "Market Analyst",
                Role.TechnicalAnalyst,
                "Assess price action and technical indicators to time entries and exits.",
                [no_future, concise],
                ["get_YFin_data", "get_stockstats_indicators_report"],
            ),
            spec(
                "Social Media Analyst",
                Role.SentimentAnalyst,
                "Gauge collective investor sentiment and its likely short-term impact.",
                [no_future, concise],
                ["get_reddit_stock_info", "get_EODHD_sentiment"],
            ),
            spec(
                "News Analyst",
                Role.NewsAnalyst,
                "Assess macroeconomic conditions and news events that could move the stock.",
                [no_future, concise],
                ["get_EODHD_news", "get_finnhub_news"],
            ),
            spec(
                "Fundamentals Analyst",
                Role.FundamentalsAnalyst,
                "Assess intrinsic value from financials, profile, and insider activity.",
                [no_future, concise],
                [
                    "get_finnhub_company_profile",
                    "get_finnhub_basic_company_financials",
                    "get_finnhub_company_financials_history",
                    "get_finnhub_company_insider_sentiment",
                    "get_finnhub_company_insider_transactions",
                ],
            ),
            spec("Bull Researcher", Role.BullResearcher, "Build the strongest case for the investment.", [concise]),
            spec("Bear Researcher", Role.BearResearcher, "Build the strongest case against the investment.", [concise]),
            spec("Trader", Role.Trader, "Convert research into a concrete buy/sell/hold decision.", [concise]),
            spec("Risky Analyst", Role.RiskyAnalyst, "Advocate the highest-reward posture the evidence supports.", [concise]),
            spec("Safe Analyst", Role.SafeAnalyst, "Advocate capital preservation and exposure reduction.", [concise]),
            spec("Neutral Analyst", Role.NeutralAnalyst, "Balance the aggressive and conservative views.", [concise]),
            spec("Facilitator", Role.Facilitator, "Review debates and record the prevailing perspective.", [concise]),
            spec("Fund Manager", Role.FundManager, "Approve or adjust the final trade within risk constraints.", [concise]),
        ]
    }


def validate_spec(spec: AgentSpec, registry: ToolRegistry) -> None:
    unknown = [t for t in spec.tools if t not in registry.names()]
    if unknown:
        raise AgentError(f"{spec.role.value} references unregistered tools {unknown}")
    if spec.role in _SLOT_FOR_ROLE and not spec.tools:
        raise AgentError(f"analyst role {spec.role.value} needs at least one tool")
    if spec.role not in _SLOT_FOR_ROLE and spec.tools:
        raise AgentError(f"non-analyst role {spec.role.value} must not carry tools")


# -- prompt assembly ---------------------------------------------------------


def _constraints_text(spec: AgentSpec) -> str:
    return "\n".join(f"- {c}" for c in spec.constraints) or "- none"


def _tools_text(registry: ToolRegistry, names: tuple[str, ...]) -> str:
    lines = []
    for schema in registry.schemas(list(names)):
        params = ", ".join(sorted(schema["parameters"].get("properties", {})))
        lines.append(f"- {schema['name']}({params}): {schema['description']}")
    return "\n".join(lines)


def _reports_digest(state: GlobalState) -> str:
    sections = []
    for slot in SLOT_OWNERS:
        report = getattr(state, slot)
        if report is not None:
            sections.append(f"### {slot} ({report.author_role.value})\n{report.body}")
    return "\n\n".join(sections) or "(no reports)"


def _transcript_digest(debate) -> str:
    if not debate.utterances:
        return "(no arguments yet)"
    return "\n".join(f"[round {u.round}] {u.role.value}: {u.text}" for u in debate.utterances)


def _extract_key_points(body: str) -> list[str]:
    points = []
    for line in body.splitlines():
        stripped = line.strip()
        if stripped.startswith("- ") or stripped.startswith("* "):
            points.append(stripped[2:].strip())
    return points[:10]


def _render(role: Role, **fields) -> str:
    return load_template(_TEMPLATE_FOR_ROLE[role]).format(**fields)


# -- decision / verdict parsing ----------------------------------------------


def parse_final_decision(text: str) -> Signal | None:
    """Last line containing `FINAL DECISION: BUY|SELL|HOLD` wins."""
    for line in reversed(text.splitlines()):
        m = _DECISION_RE.search(line)
        if m:
            return Signal(m.group(1).capitalize())
    return None


def parse_verdict(text: str, allowed: tuple[str, ...]) -> str | None:
    for line in reversed(text.splitlines()):
        m = _VERDICT_RE.search(line)
        if m and m.group(1).lower() in allowed:
            return m.group(1).lower()
    return None


def _text_response(backend: Backend, request: CompletionRequest) -> str:
    response = backend.complete(request)
    if response.kind != "text":
        raise AgentError(f"{request.role} returned tool calls where prose was expected")
    return response.text


def _request_with_retry(backend: Backend, request: CompletionRequest, parse, what: str):
    """Issue a request, parse the reply, and reprompt once on parse failure."""
    text = _text_response(backend, request)
    parsed = parse(text)
    if parsed is not None:
        return parsed, text
    reminder = ChatMessage(
        "user",
        f"Your previous answer did not include a parseable {what} line. "
        f"Repeat your answer and end with the required `{what}` line.",
    )
    retry = CompletionRequest(
        tier=request.tier,
        messages=[*request.messages, ChatMessage("assistant", text), reminder],
        role=request.role,
        day=request.day,
        purpose=request.purpose,
    )
    text = _text_response(backend, retry)
    parsed = parse(text)
    if parsed is None:
        raise DecisionParseError(f"{request.role} produced no parseable {what} line after reprompt")
    return parsed, text


# -- pipeline stages -----------------------------------------------------------


def run_analyst(
    spec: AgentSpec,
    state: GlobalState,
    store: MarketDataStore,
    backend: Backend,
    registry: ToolRegistry,
    config: AgentsConfig,
) -> Report:
    """Run one analyst's ReAct loop and write its report slot."""
    if spec.role not in _SLOT_FOR_ROLE:
        raise AgentError(f"{spec.role.value} is not an analyst role")
    slot = _SLOT_FOR_ROLE[spec.role]
    if getattr(state, slot) is not None:
        raise AgentError(f"slot {slot} already written")
    validate_spec(spec, registry)

    ctx = ToolContext(store=store, ticker=state.ticker, day=state.day)
    day = state.day.isoformat()
    system = _render(
        spec.role,
        name=spec.name,
        ticker=state.ticker,
        day=day,
        goal=spec.goal,
        constraints=_constraints_text(spec),
        tools=_tools_text(registry, spec.tools),
    )
    messages = [
        ChatMessage("system", system),
        ChatMessage("user", f"Begin your analysis of {state.ticker} for {day}."),
    ]
    schemas = registry.schemas(list(spec.tools))
    trace: list[ToolCallRecord] = []
    step = 0
    for _ in range(config.max_steps):
        request = CompletionRequest(
            tier=spec.tier,
            messages=list(messages),
            available_tools=schemas,
            role=spec.role.value,
            day=day,
        )
        response = backend.complete(request)
        if response.kind == "text":
            report = Report(
                author_role=spec.role,
                body=response.text,
                key_points=_extract_key_points(response.text),
                tool_trace=trace,
            )
            write_report(state, slot, report)
            return report
        for call in response.tool_calls:
            observation = registry.execute(call.tool_name, call.arguments, ctx)
            if config.summarize_over_chars is not None and len(observation) > config.summarize_over_chars:
                observation = _text_response(
                    backend,
                    CompletionRequest(
                        tier=config.quick,
                        messages=[
                            ChatMessage("system", load_template("summarizer")),
                            ChatMessage("user", observation),
                        ],
                        role=spec.role.value,
                        day=day,
                        purpose="summarize",
                    ),
                )
            record = ToolCallRecord(call.tool_name, dict(call.arguments), observation, step)
            trace.append(record)
            messages.append(
                ChatMessage(
                    "assistant",
                    f"Calling {call.tool_name}({json.dumps(call.arguments, sort_keys=True)})",
                    record,
                )
            )
            messages.append(ChatMessage("tool", observation, record))
            step += 1
    raise AgentLoopError(f"{spec.role.value} exceeded max_steps={config.max_steps} after tool step {step}")


def _debate_request(spec, state, debate, extra_fields, backend) -> str:
    system = _render(
        spec.role,
        name=spec.name,
        ticker=state.ticker,
        day=state.day.isoformat(),
        goal=spec.goal,
        constraints=_constraints_text(spec),
        transcript=_transcript_digest(debate),
        **extra_fields,
    )
    request = CompletionRequest(
        tier=spec.tier,
        messages=[ChatMessage("system", system), ChatMessage("user", "Present your argument.")],
        role=spec.role.value,
        day=state.day.isoformat(),
    )
    return _text_response(backend, request)


def run_research_debate(
    state: GlobalState,
    backend: Backend,
    config: AgentsConfig,
    specs: dict[Role, AgentSpec],
) -> GlobalState:
    """Bull/bear rounds followed by the facilitator's verdict."""
    missing = state.missing_reports()
    if missing:
        raise StageGateError(f"research debate requires all analyst reports; missing {missing}")
    debate = state.investment_debate
    reports = _reports_digest(state)
    for _ in range(debate.max_rounds):
        for role in debate.participants:
            text = _debate_request(specs[role], state, debate, {"reports": reports}, backend)
            record_utterance(state, "investment", role, text)

    facilitator = specs[Role.Facilitator]
    system = load_template("research_facilitator").format(
        name=facilitator.name,
        ticker=state.ticker,
        day=state.day.isoformat(),
        goal=facilitator.goal,
        transcript=_transcript_digest(debate),
    )
    request = CompletionRequest(
        tier=facilitator.tier,
        messages=[ChatMessage("system", system), ChatMessage("user", "Deliver your verdict.")],
        role=facilitator.role.value,
        day=state.day.isoformat(),
    )
    winner, text = _request_with_retry(
        backend, request, lambda t: parse_verdict(t, debate.allowed_verdicts), "VERDICT"
    )
    record_verdict(state, "investment", winner, text)
    return state


def run_trader(
    state: GlobalState,
    backend: Backend,
    config: AgentsConfig,
    specs: dict[Role, AgentSpec],
) -> GlobalState:
    if state.investment_debate.verdict is None:
        raise StageGateError("trader requires the investment debate verdict")
    spec = specs[Role.Trader]
    system = _render(
        spec.role,
        name=spec.name,
        ticker=state.ticker,
        day=state.day.isoformat(),
        goal=spec.goal,
        constraints=_constraints_text(spec),
        reports=_reports_digest(state),
        verdict=state.investment_debate.verdict.winner,
        verdict_rationale=state.investment_debate.verdict.rationale,
    )
    request = CompletionRequest(
        tier=spec.tier,
        messages=[ChatMessage("system", system), ChatMessage("user", "Make your decision.")],
        role=spec.role.value,
        day=state.day.isoformat(),
    )
    action, text = _request_with_retry(backend, request, parse_final_decision, "FINAL DECISION")
    set_trader_decision(state, Decision(action=action, rationale=text, author_role=Role.Trader))
    return state


def run_risk_debate(
    state: GlobalState,
    backend: Backend,
    config: AgentsConfig,
    specs: dict[Role, AgentSpec],
) -> GlobalState:
    """Risky/safe/neutral rounds followed by the facilitator's adjusted plan."""
    if state.trader_decision is None:
        raise StageGateError("risk debate requires the trader decision")
    debate = state.risk_debate
    trader_fields = {
        "trader_action": state.trader_decision.action.value,
        "trader_rationale": state.trader_decision.rationale,
    }
    for _ in range(debate.max_rounds):
        for role in debate.participants:
            text = _debate_request(specs[role], state, debate, trader_fields, backend)
            record_utterance(state, "risk", role, text)

    facilitator = specs[Role.Facilitator]
    system = load_template("risk_facilitator").format(
        name=facilitator.name,
        ticker=state.ticker,
        day=state.day.isoformat(),
        goal=facilitator.goal,
        transcript=_transcript_digest(debate),
        **trader_fields,
    )
    request = CompletionRequest(
        tier=facilitator.tier,
        messages=[ChatMessage("system", system), ChatMessage("user", "Deliver your verdict.")],
        role=facilitator.role.value,
        day=state.day.isoformat(),
    )
    winner, text = _request_with_retry(
        backend, request, lambda t: parse_verdict(t, debate.allowed_verdicts), "VERDICT"
    )
    record_verdict(state, "risk", winner, text)
    return state


def run_fund_manager(
    state: GlobalState,
    backend: Backend,
    config: AgentsConfig,
    specs: dict[Role, AgentSpec],
) -> GlobalState:
    if state.risk_debate.verdict is None:
        raise StageGateError("fund manager requires the risk debate verdict")
    spec = specs[Role.FundManager]
    system = _render(
        spec.role,
        name=spec.name,
        ticker=state.ticker,
        day=state.day.isoformat(),
        goal=spec.goal,
        constraints=_constraints_text(spec),
        trader_action=state.trader_decision.action.value,
        trader_rationale=state.trader_decision.rationale,
        verdict=state.risk_debate.verdict.winner,
        verdict_rationale=state.risk_debate.verdict.rationale,
    )
    request = CompletionRequest(
        tier=spec.tier,
        messages=[ChatMessage("system", system), ChatMessage("user", "Make your decision.")],
        role=spec.role.value,
        day=state.day.isoformat(),
    )
    action, text = _request_with_retry(backend, request, parse_final_decision, "FINAL DECISION")
    if action is not state.trader_decision.action:
        logger.info(
            "fund manager override on %s %s: trader %s -> final %s",
            state.ticker, state.day, state.trader_decision.action.value, action.value,
        )
    set_final_decision(state, Decision(action=action, rationale=text, author_role=Role.FundManager))
    return state


def run_pipeline(
    ticker: str,
    day: date,
    config: AgentsConfig,
    store: MarketDataStore,
    backend: Backend,
    registry: ToolRegistry | None = None,
    specs: dict[Role, AgentSpec] | None = None,
    session_dir: str | Path | None = None,
) -> tuple[GlobalState, Decision]:
    """Execute the full pipeline for one ticker-day and return the final decision."""
    registry = registry or default_registry()
    specs = specs or default_agent_specs(config)
    if not store.bars_as_of(ticker, day, lookback=1):
        raise AgentError(f"store has no bar for {ticker} on {day}")
    state = new_day_state(ticker, day, config.research_rounds, config.risk_rounds)

    analyst_specs = [specs[role] for role in SLOT_OWNERS.values()]
    try:
        if config.concurrent_analysts:
            with ThreadPoolExecutor(max_workers=len(analyst_specs)) as pool:
                futures = [
                    pool.submit(run_analyst, spec, state, store, backend, registry, config)
                    for spec in analyst_specs
                ]
                for future in futures:
                    future.result()
        else:
            for spec in analyst_specs:
                run_analyst(spec, state, store, backend, registry, config)
    except Exception as exc:
        raise PipelineStageError("analysts", exc) from exc

    for stage, runner in [
        ("research_debate", run_research_debate),
        ("trader", run_trader),
        ("risk_debate", run_risk_debate),
        ("fund_manager", run_fund_manager),
    ]:
        try:
            runner(state, backend, config, specs)
        except Exception as exc:
            raise PipelineStageError(stage, exc) from exc

    if session_dir is not None:
        session_dir = Path(session_dir)
        session_dir.mkdir(parents=True, exist_ok=True)
        path = session_dir / f"{ticker}_{day.isoformat()}.json"
        path.write_text(state_to_json(state))
    return state, state.final_decision


class AgentDecisionSource:
    """Decision source that runs the full agent pipeline for each trading day.

    Completed states are kept (and optionally written as session logs) so a
    caller can audit transcripts and tool traces after the backtest.
    """

    def __init__(
        self,
        config: AgentsConfig,
        backend: Backend,
        registry: ToolRegistry | None = None,
        specs: dict[Role, AgentSpec] | None = None,
        session_dir: str | Path | None = None,
    ):
        self.config = config
        self.backend = backend
        self.registry = registry or default_registry()
        self.specs = specs
        self.session_dir = session_dir
        self.states: list[GlobalState] = []

    def decide(self, ticker: str, day: date, day_index: int, store: MarketDataStore) -> Signal:
        state, decision = run_pipeline(
            ticker,
            day,
            self.config,
            store,
            self.backend,
            registry=self.registry,
            specs=self.specs,
            session_dir=self.session_dir,
        )
        self.states.append(state)
        return decision.action
