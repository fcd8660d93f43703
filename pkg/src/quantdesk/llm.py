"""Backend-agnostic chat completion with quick/deep tier routing.

Two backends satisfy the same `complete()` contract: a deterministic
scripted backend that replays fixture responses keyed by (role, day,
step), and an OpenAI-compatible HTTP backend with bounded retries.  Every
request is appended to the backend's request log, which downstream audits
read to verify that reasoning steps ran on the deep tier.

Scripted fixture format: a JSON array of entries
``{"role": ..., "day": "YYYY-MM-DD", "step": N, "response": ...}`` where
response is either ``{"kind": "text", "text": ...}`` or
``{"kind": "tool_calls", "tool_calls": [{"tool_name": ..., "arguments": {...}}]}``.
Steps count requests per (role, day) from zero.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .protocol import ToolCallRecord

QUICK = "quick"
DEEP = "deep"
_MESSAGE_ROLES = ("system", "user", "assistant", "tool")


class BackendError(Exception):
    pass


class ConfigError(BackendError):
    pass


class AuthError(BackendError):
    pass


class RateLimitError(BackendError):
    pass


class FixtureError(BackendError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant | tool
    content: str
    tool_call: ToolCallRecord | None = None

    def __post_init__(self):
        if self.role not in _MESSAGE_ROLES:
            raise ValueError(f"unknown message role {self.role!r}")
        if self.role == "tool" and self.tool_call is None:
            raise ValueError("tool message requires a tool_call record")


@dataclass(frozen=True)
class ModelTier:
    tier: str  # quick | deep
    model_id: str

    def __post_init__(self):
        if self.tier not in (QUICK, DEEP):
            raise ValueError(f"tier must be {QUICK!r} or {DEEP!r}, got {self.tier!r}")


@dataclass(frozen=True)
class ToolCallRequest:
    tool_name: str
    arguments: dict


@dataclass
class CompletionRequest:
    tier: ModelTier
    messages: list[ChatMessage]
    available_tools: list[dict] = field(default_factory=list)
    temperature: float = 0.0
    # Routing metadata: who is asking, on which simulation day, and why.
    # The scripted backend keys replay on (role, day); the request log keeps
    # purpose so audits can tell reasoning steps from retrieval sub-steps.
    role: str = ""
    day: str = ""
    purpose: str = "reasoning"

    def __post_init__(self):
        if not self.messages:
            raise ValueError("completion request needs at least one message")
        if self.messages[0].role != "system":
            raise ValueError("first message must have role 'system'")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class CompletionResponse:
    kind: str  # text | tool_calls
    text: str | None = None
    tool_calls: tuple[ToolCallRequest, ...] | None = None

    def __post_init__(self):
        if self.kind == "text":
            if self.text is None or self.tool_calls is not None:
                raise ValueError("text response must populate text only")
        elif self.kind == "tool_calls":
            if not self.tool_calls or self.text is not None:
                raise ValueError("tool_calls response must populate tool_calls only")
        else:
            raise ValueError(f"unknown response kind {self.kind!r}")


@dataclass(frozen=True)
class RequestLogEntry:
    tier: str
    model_id: str
    role: str
    day: str
    step: int
    purpose: str
    response_kind: str


class Backend:
    """Shared plumbing: per-(role, day) step counters and the request log."""

    def __init__(self):
        self.request_log: list[RequestLogEntry] = []
        self._counters: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    def _next_step(self, role: str, day: str) -> int:
        with self._lock:
            step = self._counters.get((role, day), 0)
            self._counters[(role, day)] = step + 1
            return step

    def _log(self, request: CompletionRequest, step: int, response: CompletionResponse) -> None:
        with self._lock:
            self.request_log.append(
                RequestLogEntry(
                    tier=request.tier.tier,
                    model_id=request.tier.model_id,
                    role=request.role,
                    day=request.day,
                    step=step,
                    purpose=request.purpose,
                    response_kind=response.kind,
                )
            )

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        raise NotImplementedError


def _response_from_dict(d: dict) -> CompletionResponse:
    kind = d.get("kind")
    if kind == "text":
        return CompletionResponse(kind="text", text=d["text"])
    if kind == "tool_calls":
        calls = tuple(ToolCallRequest(c["tool_name"], dict(c["arguments"])) for c in d["tool_calls"])
        return CompletionResponse(kind="tool_calls", tool_calls=calls)
    raise FixtureError(f"fixture response kind {kind!r} must be 'text' or 'tool_calls'")


class ScriptedBackend(Backend):
    """Deterministic replay backend driven by a fixture file or entry list."""

    def __init__(self, fixture: str | Path | list[dict]):
        super().__init__()
        if isinstance(fixture, (str, Path)):
            path = Path(fixture)
            if not path.exists():
                raise FixtureError(f"no such fixture file: {path}")
            try:
                entries = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise FixtureError(f"{path}: invalid JSON: {exc}") from None
        else:
            entries = fixture
        if not isinstance(entries, list):
            raise FixtureError("fixture must be a JSON array of entries")
        self._entries: dict[tuple[str, str, int], CompletionResponse] = {}
        for i, entry in enumerate(entries):
            try:
                key = (str(entry["role"]), str(entry["day"]), int(entry["step"]))
                response = _response_from_dict(entry["response"])
            except KeyError as exc:
                raise FixtureError(f"fixture entry {i} missing field {exc}") from None
            if key in self._entries:
                raise FixtureError(f"duplicate fixture key (role={key[0]}, day={key[1]}, step={key[2]})")
            self._entries[key] = response

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        step = self._next_step(request.role, request.day)
        key = (request.role, request.day, step)
        if key not in self._entries:
            raise FixtureError(
                f"no fixture entry for (role={request.role}, day={request.day}, step={step})"
            )
        response = self._entries[key]
        self._log(request, step, response)
        return response


def messages_to_wire(messages: list[ChatMessage]) -> list[dict]:
    """Map the internal transcript to chat-completions wire messages."""
    wire: list[dict] = []
    for m in messages:
        if m.role == "assistant" and m.tool_call is not None:
            wire.append(
                {
                    "role": "assistant",
                    "content": m.content or None,
                    "tool_calls": [
                        {
                            "id": f"call_{m.tool_call.step}",
                            "type": "function",
                            "function": {
                                "name": m.tool_call.tool_name,
                                "arguments": json.dumps(m.tool_call.arguments, sort_keys=True),
                            },
                        }
                    ],
                }
            )
        elif m.role == "tool":
            wire.append(
                {
                    "role": "tool",
                    "tool_call_id": f"call_{m.tool_call.step}",
                    "content": m.content,
                }
            )
        else:
            wire.append({"role": m.role, "content": m.content})
    return wire


def wire_to_response(payload: dict) -> CompletionResponse:
    """Parse one chat-completions response body."""
    try:
        message = payload["choices"][0]["message"]
    except (KeyError, IndexError, TypeError):
        raise BackendError(f"malformed completion payload: {json.dumps(payload)[:200]}") from None
    tool_calls = message.get("tool_calls")
    if tool_calls:
        calls = []
        for tc in tool_calls:
            fn = tc.get("function", {})
            try:
                args = json.loads(fn.get("arguments") or "{}")
            except json.JSONDecodeError:
                raise BackendError(f"tool call arguments are not valid JSON: {fn.get('arguments')!r}") from None
            calls.append(ToolCallRequest(fn.get("name", ""), args))
        return CompletionResponse(kind="tool_calls", tool_calls=tuple(calls))
    content = message.get("content")
    if content:
        return CompletionResponse(kind="text", text=content)
    raise BackendError("completion carried neither text nor tool calls")


class HttpBackend(Backend):
    """OpenAI-compatible chat-completions client with bounded retries.

    The credential is read from the environment (never a config file).
    Transient failures (timeouts, 429, 5xx) retry with exponential backoff
    up to `max_retries`; rate limiting and auth failures surface as their
    own error types so callers can back off or fail fast.
    """

    def __init__(
        self,
        endpoint: str,
        credential_env: str = "QUANTDESK_API_KEY",
        max_retries: int = 3,
        backoff_base: float = 0.5,
        timeout: float = 60.0,
        max_in_flight: int = 4,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
    ):
        super().__init__()
        api_key = os.environ.get(credential_env)
        if not api_key:
            raise ConfigError(f"credential environment variable {credential_env} is not set")
        self._endpoint = endpoint.rstrip("/")
        self._headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._sleep = sleep
        self._semaphore = threading.Semaphore(max_in_flight)
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        step = self._next_step(request.role, request.day)
        payload = {
            "model": request.tier.model_id,
            "messages": messages_to_wire(request.messages),
            "temperature": request.temperature,
        }
        if request.available_tools:
            payload["tools"] = [{"type": "function", "function": t} for t in request.available_tools]
        url = f"{self._endpoint}/chat/completions"

        last_error: Exception | None = None
        saw_rate_limit = False
        for attempt in range(self._max_retries + 1):
            if attempt:
                self._sleep(self._backoff_base * 2 ** (attempt - 1))
            with self._semaphore:
                try:
                    resp = self._client.post(url, headers=self._headers, json=payload)
                except httpx.TransportError as exc:
                    last_error = exc
                    continue
            if resp.status_code in (401, 403):
                raise AuthError(f"authentication failed ({resp.status_code}) at {url}")
            if resp.status_code == 429:
                saw_rate_limit = True
                last_error = BackendError("rate limited (429)")
                continue
            if resp.status_code >= 500:
                last_error = BackendError(f"upstream error {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise BackendError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
            response = wire_to_response(resp.json())
            self._log(request, step, response)
            return response
        if saw_rate_limit:
            raise RateLimitError(f"rate limited after {self._max_retries + 1} attempts")
        raise BackendError(f"request failed after {self._max_retries + 1} attempts: {last_error}")
