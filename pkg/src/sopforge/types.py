"""Core domain values: action kinds, role profiles, messages, code artifacts.

Everything here is an immutable value; instances can be shared freely
between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import PurePosixPath
from typing import Union

from .errors import EmptyContent


class ActionKind(Enum):
    """The closed set of actions that can cause a message."""

    USER_REQUIREMENT = "user_requirement"
    WRITE_PRD = "write_prd"
    WRITE_DESIGN = "write_design"
    WRITE_TASKS = "write_tasks"
    WRITE_CODE = "write_code"
    WRITE_TESTS = "write_tests"
    RUN_TESTS = "run_tests"
    DEBUG_CODE = "debug_code"
    HANDOVER_FEEDBACK = "handover_feedback"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "ActionKind":
        try:
            return cls(token)
        except ValueError:
            raise ValueError(f"unknown action kind token: {token!r}") from None


@dataclass(frozen=True)
class RoleProfile:
    """An agent's identity card: who it is, what it wants, what it watches."""

    name: str
    profile: str
    goal: str = ""
    constraints: str = ""
    watched_actions: frozenset[ActionKind] = frozenset()
    skills: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("role name must be non-empty")
        if not self.profile.strip():
            raise ValueError("role profile must be non-empty")
        if not self.watched_actions:
            raise ValueError(f"role {self.name!r} must watch at least one action kind")
        object.__setattr__(self, "watched_actions", frozenset(self.watched_actions))
        object.__setattr__(self, "skills", frozenset(self.skills))


class CodeStatus(Enum):
    DRAFT = "draft"
    TESTED_PASS = "tested_pass"
    TESTED_FAIL = "tested_fail"


@dataclass(frozen=True)
class CodeArtifact:
    """One generated source file plus its revision bookkeeping."""

    file_name: str
    code: str
    language_tag: str = "python"
    revision: int = 0
    status: CodeStatus = CodeStatus.DRAFT

    def __post_init__(self):
        if not self.file_name.strip():
            raise ValueError("file_name must be non-empty")
        path = PurePosixPath(self.file_name.replace("\\", "/"))
        if path.is_absolute() or ".." in path.parts:
            raise ValueError(f"file_name must be a relative path without traversal: {self.file_name!r}")
        if self.revision < 0:
            raise ValueError("revision must be non-negative")

    def to_payload(self) -> dict:
        return {
            "file_name": self.file_name,
            "code": self.code,
            "language_tag": self.language_tag,
            "revision": self.revision,
            "status": self.status.value,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "CodeArtifact":
        return cls(
            file_name=payload["file_name"],
            code=payload["code"],
            language_tag=payload.get("language_tag", "python"),
            revision=int(payload.get("revision", 0)),
            status=CodeStatus(payload.get("status", "draft")),
        )


@dataclass(frozen=True)
class TestReport:
    """Outcome of running one test artifact against its module."""

    __test__ = False  # not a pytest class, despite the name

    module_file: str
    tests_file: str
    status: str
    exit_code: int | None = None
    passed: int | None = None
    failed: int | None = None
    errored: int | None = None
    duration: float = 0.0

    def to_payload(self) -> dict:
        return {
            "module_file": self.module_file,
            "tests_file": self.tests_file,
            "status": self.status,
            "exit_code": self.exit_code,
            "passed": self.passed,
            "failed": self.failed,
            "errored": self.errored,
            "duration": self.duration,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TestReport":
        return cls(
            module_file=payload["module_file"],
            tests_file=payload["tests_file"],
            status=payload["status"],
            exit_code=payload.get("exit_code"),
            passed=payload.get("passed"),
            failed=payload.get("failed"),
            errored=payload.get("errored"),
            duration=float(payload.get("duration", 0.0)),
        )


# Document is defined in documents.py; the union is declared here so Message
# can be typed without a circular import at runtime.
MessageContent = Union[str, "Document", CodeArtifact, TestReport]  # noqa: F821


@dataclass(frozen=True)
class Message:
    """One entry in the shared pool. ``seq`` is assigned by the pool."""

    seq: int
    sent_from: str
    cause_by: ActionKind
    content: MessageContent
    send_to: frozenset[str] = frozenset()
    timestamp: str = ""

    def __post_init__(self):
        if self.content is None or (isinstance(self.content, str) and not self.content.strip()):
            raise EmptyContent(f"message from {self.sent_from} has empty content")
        object.__setattr__(self, "send_to", frozenset(self.send_to))

    @property
    def text(self) -> str:
        """The content as plain text, rendering structured payloads."""
        if isinstance(self.content, str):
            return self.content
        if isinstance(self.content, CodeArtifact):
            return self.content.code
        if isinstance(self.content, TestReport):
            return f"{self.content.tests_file}: {self.content.status}"
        from .documents import render_document

        return render_document(self.content)
