"""Completion providers, token/cost accounting, and response extraction.

Two providers share one protocol: a live chat-completions HTTP client and a
deterministic playbook of canned responses for offline runs and tests.  A
Gateway wraps a provider with a CostLedger so every call is attributed to a
(role, action) tag.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .errors import PlaybookExhausted, ProviderError, RatesUnset, TransportError
from .extract import extract_code_blocks, extract_sections  # noqa: F401  (public API)
from .types import ActionKind

API_KEY_ENV = "SOPFORGE_API_KEY"


@dataclass(frozen=True)
class CompletionRequest:
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_output_tokens: int = 2048
    tag: tuple[str, ActionKind] = ("", ActionKind.USER_REQUIREMENT)

    def __post_init__(self):
        if not self.system_prompt.strip() or not self.user_prompt.strip():
            raise ValueError("completion prompts must be non-empty")
        if not math.isfinite(self.temperature) or not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be finite and in [0, 2]: {self.temperature}")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int
    completion_tokens: int

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class LedgerEntry:
    role: str
    action: ActionKind
    prompt_tokens: int
    completion_tokens: int
    seconds: float


class CostLedger:
    """Per-call and cumulative token/time accounting.

    Totals are kept incrementally and re-checked against a fold over the
    entries after every append, so conservation can never drift.
    """

    def __init__(self, price_per_1k: tuple[float, float] | None = None):
        self.price_per_1k = price_per_1k
        self._entries: list[LedgerEntry] = []
        self._prompt_tokens = 0
        self._completion_tokens = 0
        self._seconds = 0.0
        self._lock = threading.Lock()

    def record(self, tag: tuple[str, ActionKind], usage: TokenUsage, seconds: float) -> None:
        if usage.prompt_tokens < 0 or usage.completion_tokens < 0 or seconds < 0:
            raise ValueError("ledger counts must be non-negative")
        with self._lock:
            self._entries.append(
                LedgerEntry(tag[0], tag[1], usage.prompt_tokens, usage.completion_tokens, seconds)
            )
            self._prompt_tokens += usage.prompt_tokens
            self._completion_tokens += usage.completion_tokens
            self._seconds += seconds
            assert self._prompt_tokens == sum(e.prompt_tokens for e in self._entries)
            assert self._completion_tokens == sum(e.completion_tokens for e in self._entries)

    @property
    def entries(self) -> list[LedgerEntry]:
        with self._lock:
            return list(self._entries)

    @property
    def calls(self) -> int:
        with self._lock:
            return len(self._entries)

    @property
    def prompt_tokens(self) -> int:
        with self._lock:
            return self._prompt_tokens

    @property
    def completion_tokens(self) -> int:
        with self._lock:
            return self._completion_tokens

    @property
    def total_tokens(self) -> int:
        with self._lock:
            return self._prompt_tokens + self._completion_tokens

    @property
    def seconds(self) -> float:
        with self._lock:
            return self._seconds

    def estimate_cost(self) -> float:
        """Prompt and completion tokens priced per thousand, summed over all
        entries."""
        if self.price_per_1k is None:
            raise RatesUnset("no token prices configured")
        prompt_rate, completion_rate = self.price_per_1k
        return sum(
            e.prompt_tokens / 1000.0 * prompt_rate + e.completion_tokens / 1000.0 * completion_rate
            for e in self.entries
        )

    def to_payload(self) -> dict:
        return {
            "totals": {
                "calls": self.calls,
                "prompt_tokens": self.prompt_tokens,
                "completion_tokens": self.completion_tokens,
                "seconds": self.seconds,
            },
            "price_per_1k": list(self.price_per_1k) if self.price_per_1k else None,
            "entries": [
                {
                    "role": e.role,
                    "action": e.action.token,
                    "prompt_tokens": e.prompt_tokens,
                    "completion_tokens": e.completion_tokens,
                    "seconds": e.seconds,
                }
                for e in self.entries
            ],
        }

    def save(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_payload(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def estimate_cost(ledger: CostLedger) -> float:
    return ledger.estimate_cost()


class CompletionProvider(Protocol):
    def complete(self, req: CompletionRequest) -> tuple[str, TokenUsage]: ...


def _whitespace_tokens(text: str) -> int:
    return len(text.split())


@dataclass
class PlaybookEntry:
    response: str
    role: str | None = None
    action: ActionKind | None = None
    consumed: bool = False

    def matches(self, tag: tuple[str, ActionKind]) -> bool:
        role_ok = self.role is None or self.role == tag[0]
        action_ok = self.action is None or self.action == tag[1]
        return role_ok and action_ok


class Playbook:
    """Deterministic scripted backend: ordered canned responses, each consumed
    at most once by the first matching request.

    Token counts are synthesized as whitespace-token counts so ledger and
    productivity paths are exercisable offline.
    """

    def __init__(self, entries: list[PlaybookEntry]):
        self._entries = list(entries)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: Path) -> "Playbook":
        entries = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    entries.append(
                        PlaybookEntry(
                            response=record["response"],
                            role=record.get("role"),
                            action=ActionKind.from_token(record["action"]) if record.get("action") else None,
                        )
                    )
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise ValueError(f"bad playbook entry at line {line_no}: {exc}") from exc
        return cls(entries)

    @property
    def remaining(self) -> int:
        with self._lock:
            return sum(1 for e in self._entries if not e.consumed)

    def complete(self, req: CompletionRequest) -> tuple[str, TokenUsage]:
        with self._lock:
            for entry in self._entries:
                if entry.consumed or not entry.matches(req.tag):
                    continue
                entry.consumed = True
                usage = TokenUsage(
                    prompt_tokens=_whitespace_tokens(req.system_prompt) + _whitespace_tokens(req.user_prompt),
                    completion_tokens=_whitespace_tokens(entry.response),
                )
                return entry.response, usage
        role, action = req.tag
        raise PlaybookExhausted(f"no unconsumed playbook entry for ({role}, {action.token})")


@dataclass
class HttpProvider:
    """Chat-completions wire client (POST <base_url>/v1/chat/completions)."""

    base_url: str
    model: str
    api_key: str | None = None
    timeout: float = 120.0

    def complete(self, req: CompletionRequest) -> tuple[str, TokenUsage]:
        url = self.base_url.rstrip("/") + "/v1/chat/completions"
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        key = self.api_key or os.environ.get(API_KEY_ENV, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = httpx.post(url, json=body, headers=headers, timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise TransportError(f"completion request failed: {exc}") from exc
        if response.status_code // 100 != 2:
            raise ProviderError(response.status_code, response.text)
        try:
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(response.status_code, f"malformed completion body: {exc}") from exc
        usage = payload.get("usage", {}) or {}
        return text, TokenUsage(
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


@dataclass
class Gateway:
    """A provider plus the ledger that bills every call to its tag."""

    provider: CompletionProvider
    ledger: CostLedger = field(default_factory=CostLedger)

    def complete(self, req: CompletionRequest) -> tuple[str, TokenUsage]:
        start = time.monotonic()
        text, usage = self.provider.complete(req)
        self.ledger.record(req.tag, usage, time.monotonic() - start)
        return text, usage
