"""Structured per-day communication state shared by the agent pipeline.

One `GlobalState` exists per (ticker, day): four single-writer report
slots, two append-only debate transcripts with facilitator verdicts, and
the trader/final decisions.  Later pipeline stages are gated on earlier
ones, and every gating failure names the missing piece.

The state serializes to canonical JSON (sorted keys, no timestamps); that
document is the per-day session log and the replay/audit unit.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

from .strategies import Signal


class Role(str, Enum):
    FundamentalsAnalyst = "FundamentalsAnalyst"
    SentimentAnalyst = "SentimentAnalyst"
    NewsAnalyst = "NewsAnalyst"
    TechnicalAnalyst = "TechnicalAnalyst"
    BullResearcher = "BullResearcher"
    BearResearcher = "BearResearcher"
    Trader = "Trader"
    RiskyAnalyst = "RiskyAnalyst"
    SafeAnalyst = "SafeAnalyst"
    NeutralAnalyst = "NeutralAnalyst"
    Facilitator = "Facilitator"
    FundManager = "FundManager"


# Report slots and the single role allowed to write each.
SLOT_OWNERS: dict[str, Role] = {
    "market_report": Role.TechnicalAnalyst,
    "sentiment_report": Role.SentimentAnalyst,
    "news_report": Role.NewsAnalyst,
    "fundamentals_report": Role.FundamentalsAnalyst,
}

INVESTMENT_VERDICTS = ("bull", "bear")
RISK_VERDICTS = ("risky", "safe", "neutral")


class ProtocolError(Exception):
    pass


class StageGateError(ProtocolError):
    """A pipeline stage ran before its preconditions were met."""


@dataclass(frozen=True)
class ToolCallRecord:
    tool_name: str
    arguments: dict
    observation: str
    step: int

    def to_dict(self) -> dict:
        return {
            "tool_name": self.tool_name,
            "arguments": self.arguments,
            "observation": self.observation,
            "step": self.step,
        }


@dataclass
class Report:
    author_role: Role
    body: str
    key_points: list[str] = field(default_factory=list)
    tool_trace: list[ToolCallRecord] = field(default_factory=list)

    def __post_init__(self):
        if not self.body:
            raise ProtocolError(f"empty report body from {self.author_role.value}")

    def to_dict(self) -> dict:
        return {
            "author_role": self.author_role.value,
            "body": self.body,
            "key_points": list(self.key_points),
            "tool_trace": [t.to_dict() for t in self.tool_trace],
        }


@dataclass(frozen=True)
class Utterance:
    round: int
    role: Role
    text: str

    def to_dict(self) -> dict:
        return {"round": self.round, "role": self.role.value, "text": self.text}


@dataclass(frozen=True)
class Verdict:
    winner: str
    rationale: str

    def to_dict(self) -> dict:
        return {"winner": self.winner, "rationale": self.rationale}


@dataclass
class DebateState:
    participants: list[Role]
    max_rounds: int
    allowed_verdicts: tuple[str, ...]
    utterances: list[Utterance] = field(default_factory=list)
    verdict: Verdict | None = None

    def expected_speaker(self) -> Role:
        return self.participants[len(self.utterances) % len(self.participants)]

    def next_round(self) -> int:
        return len(self.utterances) // len(self.participants) + 1

    def rounds_complete(self) -> bool:
        return len(self.utterances) >= self.max_rounds * len(self.participants)

    def to_dict(self) -> dict:
        return {
            "participants": [p.value for p in self.participants],
            "max_rounds": self.max_rounds,
            "utterances": [u.to_dict() for u in self.utterances],
            "verdict": self.verdict.to_dict() if self.verdict else None,
        }


@dataclass
class Decision:
    action: Signal
    rationale: str
    author_role: Role

    def __post_init__(self):
        if not self.rationale:
            raise ProtocolError(f"empty decision rationale from {self.author_role.value}")

    def to_dict(self) -> dict:
        return {
            "action": self.action.value,
            "rationale": self.rationale,
            "author_role": self.author_role.value,
        }


@dataclass
class GlobalState:
    ticker: str
    day: date
    market_report: Report | None = None
    sentiment_report: Report | None = None
    news_report: Report | None = None
    fundamentals_report: Report | None = None
    investment_debate: DebateState | None = None  # always set by new_day_state
    trader_decision: Decision | None = None
    risk_debate: DebateState | None = None
    final_decision: Decision | None = None
    _slot_lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def missing_reports(self) -> list[str]:
        return [slot for slot in SLOT_OWNERS if getattr(self, slot) is None]

    def debate(self, which: str) -> DebateState:
        if which == "investment":
            return self.investment_debate
        if which == "risk":
            return self.risk_debate
        raise ProtocolError(f"unknown debate {which!r}; expected 'investment' or 'risk'")


def new_day_state(ticker: str, day: date, debate_rounds: int = 1, risk_rounds: int = 1) -> GlobalState:
    """Fresh per-day state with empty slots and initialized debates."""
    if debate_rounds < 1 or risk_rounds < 1:
        raise ValueError(f"debate rounds must be >= 1, got {debate_rounds}/{risk_rounds}")
    return GlobalState(
        ticker=ticker,
        day=day,
        investment_debate=DebateState(
            participants=[Role.BullResearcher, Role.BearResearcher],
            max_rounds=debate_rounds,
            allowed_verdicts=INVESTMENT_VERDICTS,
        ),
        risk_debate=DebateState(
            participants=[Role.RiskyAnalyst, Role.SafeAnalyst, Role.NeutralAnalyst],
            max_rounds=risk_rounds,
            allowed_verdicts=RISK_VERDICTS,
        ),
    )


def write_report(state: GlobalState, slot: str, report: Report) -> GlobalState:
    """Fill a report slot exactly once, by its owning role only."""
    if slot not in SLOT_OWNERS:
        raise ProtocolError(f"unknown report slot {slot!r}; expected one of {sorted(SLOT_OWNERS)}")
    owner = SLOT_OWNERS[slot]
    if report.author_role is not owner:
        raise ProtocolError(
            f"{report.author_role.value} may not write {slot}; owner is {owner.value}"
        )
    with state._slot_lock:
        if getattr(state, slot) is not None:
            raise ProtocolError(f"slot {slot} already written for {state.ticker} {state.day}")
        setattr(state, slot, report)
    return state


def record_utterance(state: GlobalState, which: str, role: Role, text: str) -> GlobalState:
    """Append one debate utterance; speakers alternate in the fixed order."""
    debate = state.debate(which)
    if debate.verdict is not None:
        raise ProtocolError(f"{which} debate already concluded with verdict {debate.verdict.winner!r}")
    if debate.rounds_complete():
        raise ProtocolError(f"{which} debate already ran its {debate.max_rounds} round(s)")
    expected = debate.expected_speaker()
    if role is not expected:
        raise ProtocolError(f"out of turn: expected {expected.value}, got {role.value}")
    if not text:
        raise ProtocolError(f"empty utterance from {role.value}")
    debate.utterances.append(Utterance(round=debate.next_round(), role=role, text=text))
    return state


def record_verdict(state: GlobalState, which: str, winner: str, rationale: str) -> GlobalState:
    """Record the facilitator's verdict, exactly once, after the final round."""
    debate = state.debate(which)
    if debate.verdict is not None:
        raise ProtocolError(f"{which} debate verdict already recorded")
    if not debate.rounds_complete():
        done = len(debate.utterances) / len(debate.participants)
        raise ProtocolError(
            f"premature verdict: {which} debate has run {done:g} of {debate.max_rounds} round(s)"
        )
    if winner not in debate.allowed_verdicts:
        raise ProtocolError(f"verdict {winner!r} not in {debate.allowed_verdicts}")
    if not rationale:
        raise ProtocolError("empty verdict rationale")
    debate.verdict = Verdict(winner=winner, rationale=rationale)
    return state


def set_trader_decision(state: GlobalState, decision: Decision) -> GlobalState:
    missing = state.missing_reports()
    if missing:
        raise StageGateError(f"trader decision requires all analyst reports; missing {missing}")
    if state.investment_debate.verdict is None:
        raise StageGateError("trader decision requires the investment debate verdict")
    if state.trader_decision is not None:
        raise ProtocolError("trader decision already recorded")
    state.trader_decision = decision
    return state


def set_final_decision(state: GlobalState, decision: Decision) -> GlobalState:
    if state.trader_decision is None:
        raise StageGateError("final decision requires the trader decision")
    if state.risk_debate.verdict is None:
        raise StageGateError("final decision requires the risk debate verdict")
    if state.final_decision is not None:
        raise ProtocolError("final decision already recorded")
    state.final_decision = decision
    return state


# -- serialization ----------------------------------------------------------

def state_to_dict(state: GlobalState) -> dict:
    override = (
        state.final_decision is not None
        and state.trader_decision is not None
        and state.final_decision.action is not state.trader_decision.action
    )
    return {
        "ticker": state.ticker,
        "day": state.day.isoformat(),
        "market_report": state.market_report.to_dict() if state.market_report else None,
        "sentiment_report": state.sentiment_report.to_dict() if state.sentiment_report else None,
        "news_report": state.news_report.to_dict() if state.news_report else None,
        "fundamentals_report": state.fundamentals_report.to_dict() if state.fundamentals_report else None,
        "investment_debate": state.investment_debate.to_dict(),
        "trader_decision": state.trader_decision.to_dict() if state.trader_decision else None,
        "risk_debate": state.risk_debate.to_dict() if state.risk_debate else None,
        "final_decision": state.final_decision.to_dict() if state.final_decision else None,
        "fund_manager_override": override,
    }


def state_to_json(state: GlobalState) -> str:
    """Canonical session-log form: sorted keys, 2-space indent, no timestamps."""
    return json.dumps(state_to_dict(state), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _report_from_dict(d: dict | None) -> Report | None:
    if d is None:
        return None
    return Report(
        author_role=Role(d["author_role"]),
        body=d["body"],
        key_points=list(d["key_points"]),
        tool_trace=[
            ToolCallRecord(
                tool_name=t["tool_name"],
                arguments=t["arguments"],
                observation=t["observation"],
                step=t["step"],
            )
            for t in d["tool_trace"]
        ],
    )


def _decision_from_dict(d: dict | None) -> Decision | None:
    if d is None:
        return None
    return Decision(action=Signal(d["action"]), rationale=d["rationale"], author_role=Role(d["author_role"]))


def _debate_from_dict(d: dict, allowed: tuple[str, ...]) -> DebateState:
    debate = DebateState(
        participants=[Role(p) for p in d["participants"]],
        max_rounds=d["max_rounds"],
        allowed_verdicts=allowed,
        utterances=[Utterance(round=u["round"], role=Role(u["role"]), text=u["text"]) for u in d["utterances"]],
    )
    if d.get("verdict"):
        debate.verdict = Verdict(winner=d["verdict"]["winner"], rationale=d["verdict"]["rationale"])
    return debate


def state_from_dict(d: dict) -> GlobalState:
    state = GlobalState(
        ticker=d["ticker"],
        day=date.fromisoformat(d["day"]),
        market_report=_report_from_dict(d["market_report"]),
        sentiment_report=_report_from_dict(d["sentiment_report"]),
        news_report=_report_from_dict(d["news_report"]),
        fundamentals_report=_report_from_dict(d["fundamentals_report"]),
        investment_debate=_debate_from_dict(d["investment_debate"], INVESTMENT_VERDICTS),
        risk_debate=_debate_from_dict(d["risk_debate"], RISK_VERDICTS),
    )
    state.trader_decision = _decision_from_dict(d["trader_decision"])
    state.final_decision = _decision_from_dict(d["final_decision"])
    return state


def state_from_json(text: str) -> GlobalState:
    return state_from_dict(json.loads(text))
