"""The shared message pool: append-only log, publish, filtered fetch, gating.

The pool is internally synchronized; publish, fetch_new, ready and snapshot
are each atomic and linearizable, so any number of threads may drive it.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .documents import Document, DocumentKind, parse_document, render_document
from .errors import CorruptLog, EmptyContent, UnknownSubscription
from .types import ActionKind, CodeArtifact, Message, RoleProfile, TestReport


@dataclass
class Subscription:
    """A role's registered interest set plus its read cursor.

    The cursor is the seq of the last delivered message (-1 before any
    delivery) and never decreases.
    """

    subscriber: str
    interests: frozenset[ActionKind]
    cursor: int = -1


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class MessagePool:
    """Append-only shared pool with profile-based subscriptions."""

    def __init__(self):
        self._lock = threading.Lock()
        self._log: list[Message] = []
        self._subs: dict[str, Subscription] = {}

    def __len__(self) -> int:
        with self._lock:
            return len(self._log)

    def register(self, profile: RoleProfile) -> Subscription:
        """Create (or return) the subscription for a role, with interests
        frozen from the profile's watched actions."""
        with self._lock:
            sub = self._subs.get(profile.name)
            if sub is None:
                sub = Subscription(subscriber=profile.name, interests=frozenset(profile.watched_actions))
                self._subs[profile.name] = sub
            return sub

    def publish(
        self,
        *,
        sent_from: str,
        cause_by: ActionKind,
        content,
        send_to: Iterable[str] = (),
    ) -> int:
        """Append a message with the next sequence number; returns the seq."""
        if content is None or (isinstance(content, str) and not content.strip()):
            raise EmptyContent(f"refusing to publish empty content from {sent_from}")
        with self._lock:
            msg = Message(
                seq=len(self._log),
                sent_from=sent_from,
                cause_by=cause_by,
                content=content,
                send_to=frozenset(send_to),
                timestamp=_now(),
            )
            self._log.append(msg)
            return msg.seq

    def _matches(self, msg: Message, sub: Subscription) -> bool:
        return msg.cause_by in sub.interests or sub.subscriber in msg.send_to

    def fetch_new(self, subscriber: str) -> list[Message]:
        """Deliver, in seq order, every undelivered message matching the
        subscriber's interests or addressed to it; advances the cursor to the
        pool's current max seq."""
        with self._lock:
            sub = self._subs.get(subscriber)
            if sub is None:
                raise UnknownSubscription(f"no subscription registered for {subscriber!r}")
            out = [m for m in self._log[sub.cursor + 1 :] if self._matches(m, sub)]
            sub.cursor = len(self._log) - 1
            return out

    def pending(self, subscriber: str) -> bool:
        """True when fetch_new would deliver at least one message. Does not
        move the cursor."""
        with self._lock:
            sub = self._subs.get(subscriber)
            if sub is None:
                raise UnknownSubscription(f"no subscription registered for {subscriber!r}")
            return any(self._matches(m, sub) for m in self._log[sub.cursor + 1 :])

    def ready(self, prerequisites: Iterable[ActionKind]) -> bool:
        """True iff every prerequisite kind has at least one pool message.
        Monotone non-decreasing as the pool grows."""
        wanted = set(prerequisites)
        if not wanted:
            return True
        with self._lock:
            present = {m.cause_by for m in self._log}
        return wanted <= present

    def snapshot(self) -> list[Message]:
        """Seq-ascending copy of the whole log; moves no cursor."""
        with self._lock:
            return list(self._log)

    # -- persistence ---------------------------------------------------------

    def save_jsonl(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for msg in self.snapshot():
                fh.write(json.dumps(message_to_record(msg), ensure_ascii=False) + "\n")

    @classmethod
    def load_jsonl(cls, path: Path) -> "MessagePool":
        pool = cls()
        for record in read_message_log(Path(path)):
            pool._log.append(record_to_message(record))
        return pool


def message_to_record(msg: Message) -> dict:
    content = msg.content
    if isinstance(content, str):
        kind, payload = "text", content
    elif isinstance(content, CodeArtifact):
        kind, payload = "code_artifact", content.to_payload()
    elif isinstance(content, TestReport):
        kind, payload = "test_report", content.to_payload()
    else:
        kind, payload = content.kind.value, render_document(content)
    return {
        "seq": msg.seq,
        "sent_from": msg.sent_from,
        "cause_by": msg.cause_by.token,
        "send_to": sorted(msg.send_to),
        "timestamp": msg.timestamp,
        "content_kind": kind,
        "content": payload,
    }


def record_to_message(record: dict) -> Message:
    kind = record["content_kind"]
    payload = record["content"]
    if kind == "text":
        content = payload
    elif kind == "code_artifact":
        content = CodeArtifact.from_payload(payload)
    elif kind == "test_report":
        content = TestReport.from_payload(payload)
    else:
        content = parse_document(DocumentKind(kind), payload)
    return Message(
        seq=int(record["seq"]),
        sent_from=record["sent_from"],
        cause_by=ActionKind.from_token(record["cause_by"]),
        content=content,
        send_to=frozenset(record.get("send_to", ())),
        timestamp=record.get("timestamp", ""),
    )


def read_message_log(path: Path) -> list[dict]:
    """Read a persisted message log, verifying JSON shape and seq contiguity
    (0..N-1 in file order). Raises CorruptLog naming the offending line."""
    records: list[dict] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptLog(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict) or "seq" not in record:
                raise CorruptLog(line_no, "record is not an object with a seq field")
            expected = len(records)
            if record["seq"] != expected:
                raise CorruptLog(line_no, f"expected seq {expected}, found {record['seq']}")
            records.append(record)
    return records
