"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SopforgeError(Exception):
    """Base class for every error raised by this package."""


class EmptyInput(SopforgeError):
    """A document or prompt text that must be non-empty was empty."""


class EmptyContent(SopforgeError):
    """A message or artifact was published/consumed with no content."""


class SchemaViolation(SopforgeError):
    """A structured document does not satisfy its schema.

    ``missing`` lists required section titles that were absent; ``detail``
    carries any non-section problem (e.g. a bad priority token).
    """

    def __init__(self, kind: str, missing: list[str] | None = None, detail: str = ""):
        self.kind = kind
        self.missing = list(missing or [])
        self.detail = detail
        parts = [f"schema violation for {kind}"]
        if self.missing:
            parts.append(f"missing sections: {', '.join(self.missing)}")
        if detail:
            parts.append(detail)
        super().__init__("; ".join(parts))


class UnknownSubscription(SopforgeError):
    """fetch_new was called for a subscriber the pool has never seen."""


class CorruptLog(SopforgeError):
    """A persisted message log failed verification."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"message log corrupt at line {line_no}: {reason}")


class IdeaEmpty(SopforgeError):
    """The pipeline was started with an empty idea."""


class RoundLimitExceeded(SopforgeError):
    """The scheduler hit max_rounds while roles were still stepping.

    The partial result is attached so callers can inspect what was produced.
    """

    def __init__(self, rounds: int, partial=None):
        self.rounds = rounds
        self.partial = partial
        super().__init__(f"pipeline exceeded the round limit ({rounds} rounds)")


class BackendFailure(SopforgeError):
    """A completion backend failed while a role was acting."""

    def __init__(self, role: str, action: str, cause: Exception, state=None):
        self.role = role
        self.action = action
        self.cause = cause
        self.state = state
        super().__init__(f"backend failure for {role}/{action}: {cause}")


class TransportError(SopforgeError):
    """The completion provider could not be reached."""


class ProviderError(SopforgeError):
    """The completion provider answered with a non-success status."""

    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        super().__init__(f"provider returned HTTP {status}: {body[:200]}")


class PlaybookExhausted(SopforgeError):
    """No unconsumed playbook entry matched the request."""


class NoCodeBlock(SopforgeError):
    """A response that must contain a fenced code block contained none."""


class SandboxUnavailable(SopforgeError):
    """No sandbox executor was supplied to an operation that needs one."""


class DomainError(SopforgeError):
    """An estimator was called outside its domain."""


class SampleCountTooSmall(SopforgeError):
    """A benchmark task has fewer samples than the largest requested k."""

    def __init__(self, task_id: str, n: int, k: int):
        self.task_id = task_id
        self.n = n
        self.k = k
        super().__init__(f"task {task_id} has {n} samples but k={k} was requested")


class NoSourceFiles(SopforgeError):
    """A source directory contained no files with the configured extensions."""


class ZeroLines(SopforgeError):
    """Productivity was requested for a project with no counted lines."""


class RangeError(SopforgeError):
    """A human-entered score was outside its documented range."""


class RatesUnset(SopforgeError):
    """Cost estimation was requested without configured token prices."""


class EmptyTranscript(SopforgeError):
    """Handover feedback was requested for a role that received nothing."""
