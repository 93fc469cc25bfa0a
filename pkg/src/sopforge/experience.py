"""Cross-project self-improvement: after a project each role distills the
feedback it received into a constraint update stored in long-term memory and
folded into its constraints on the next run.

Only the constraints text ever changes; name, profile, goal and watched
actions are untouched by experience."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .errors import EmptyTranscript
from .gateway import CompletionRequest, Gateway
from .prompts import HANDOVER_TEMPLATE, role_system_prompt
from .types import ActionKind, Message, RoleProfile

DEFAULT_CONSTRAINT_BUDGET = 2000
DATA_DIR_ENV = "SOPFORGE_DATA_DIR"


@dataclass(frozen=True)
class ExperienceEntry:
    role_name: str
    project_id: str
    summary: str
    constraint_delta: str
    created_at: str

    def __post_init__(self):
        if not self.summary.strip() or not self.constraint_delta.strip():
            raise ValueError("summary and constraint_delta must be non-empty")

    def to_payload(self) -> dict:
        return {
            "role_name": self.role_name,
            "project_id": self.project_id,
            "summary": self.summary,
            "constraint_delta": self.constraint_delta,
            "created_at": self.created_at,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ExperienceEntry":
        return cls(
            role_name=payload["role_name"],
            project_id=payload["project_id"],
            summary=payload["summary"],
            constraint_delta=payload["constraint_delta"],
            created_at=payload["created_at"],
        )


def default_store_path() -> Path:
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        return Path(base) / "experience.jsonl"
    return Path.home() / ".local" / "share" / "sopforge" / "experience.jsonl"


class ExperienceStore:
    """Append-only JSONL store; replaying it reproduces identical state."""

    def __init__(self, path: Path | None = None):
        self.path = Path(path) if path else default_store_path()
        self._lock = threading.Lock()

    def append(self, entry: ExperienceEntry) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_payload(), ensure_ascii=False) + "\n")

    def load(self, role_name: str | None = None) -> list[ExperienceEntry]:
        with self._lock:
            if not self.path.exists():
                return []
            entries = []
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    entry = ExperienceEntry.from_payload(json.loads(line))
                    if role_name is None or entry.role_name == role_name:
                        entries.append(entry)
            return entries


def _render_transcript(transcript: Sequence[Message]) -> str:
    lines = []
    for msg in transcript:
        text = msg.text
        snippet = text if len(text) <= 400 else text[:400] + "..."
        lines.append(f"[{msg.seq}] from {msg.sent_from} ({msg.cause_by.token}): {snippet}")
    return "\n".join(lines)


def handover_feedback(
    role: RoleProfile,
    transcript: Sequence[Message],
    gateway: Gateway,
    store: ExperienceStore,
    project_id: str,
) -> ExperienceEntry:
    """Summarize what the role received during a project into a constraint
    update and persist it."""
    if not transcript:
        raise EmptyTranscript(f"role {role.name} received no messages")
    req = CompletionRequest(
        system_prompt=role_system_prompt(role),
        user_prompt=HANDOVER_TEMPLATE.format(transcript=_render_transcript(transcript)),
        tag=(role.name, ActionKind.HANDOVER_FEEDBACK),
    )
    text, _ = gateway.complete(req)
    delta = text.strip()
    summary = delta.splitlines()[0].strip() if delta else ""
    entry = ExperienceEntry(
        role_name=role.name,
        project_id=project_id,
        summary=summary,
        constraint_delta=delta,
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    store.append(entry)
    return entry


def load_constraints(
    role_name: str,
    store: ExperienceStore,
    base_constraints: str,
    budget: int = DEFAULT_CONSTRAINT_BUDGET,
) -> str:
    """Base constraints plus all stored deltas in creation order, dropping the
    oldest deltas first when the combined text exceeds the budget. The base is
    never truncated."""
    deltas = [e.constraint_delta for e in store.load(role_name)]

    def rendered(parts: list[str]) -> str:
        return "\n".join([base_constraints] + parts) if parts else base_constraints

    while deltas and len(rendered(deltas)) > budget:
        deltas.pop(0)
    return rendered(deltas)


def apply_experience(
    profile: RoleProfile, store: ExperienceStore, budget: int = DEFAULT_CONSTRAINT_BUDGET
) -> RoleProfile:
    """Return the profile with experience folded into its constraints; every
    other field is untouched."""
    return replace(
        profile, constraints=load_constraints(profile.name, store, profile.constraints, budget)
    )
