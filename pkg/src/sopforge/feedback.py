"""The iterative-programming loop: run tests, feed failures back, retry.

The first execution is attempt zero; each debug cycle after a failure counts
as one retry.  The loop stops at the first passing run or after the third
retry, so an artifact is executed at most four times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import (
    BackendFailure,
    EmptyContent,
    NoCodeBlock,
    PlaybookExhausted,
    ProviderError,
    SandboxUnavailable,
    TransportError,
)
from .extract import extract_code_blocks
from .gateway import CompletionRequest, Gateway
from .prompts import DEBUG_SYSTEM_PROMPT
from .sandbox import ExecLimits, ExecutionResult, Sandbox
from .types import ActionKind, CodeArtifact, CodeStatus

MAX_DEBUG_RETRIES = 3
STDERR_BUDGET = 4000
STDERR_TRUNCATION_MARKER = "[stderr truncated to the last 4000 characters]"
EXCERPT_BUDGET = 1200


class FeedbackStatus(Enum):
    PENDING = "pending"
    PASSED = "passed"
    FAILED = "failed"


@dataclass(frozen=True)
class FeedbackContext:
    """What the debugger gets to see besides the failure itself."""

    requirement: str = ""
    design: str = ""
    code_files: tuple[CodeArtifact, ...] = ()
    role_name: str = "Engineer"


@dataclass
class FeedbackState:
    artifact: CodeArtifact
    attempts: list[ExecutionResult] = field(default_factory=list)
    retries_used: int = 0
    status: FeedbackStatus = FeedbackStatus.PENDING


def _tail(text: str, budget: int = STDERR_BUDGET) -> str:
    if len(text) <= budget:
        return text
    return STDERR_TRUNCATION_MARKER + "\n" + text[-budget:]


def _excerpt(text: str, budget: int = EXCERPT_BUDGET) -> str:
    return text if len(text) <= budget else text[:budget] + "..."


def _attempt_summary(index: int, result: ExecutionResult) -> str:
    first_error = next((line for line in result.stderr.splitlines() if line.strip()), "")
    return (
        f"attempt {index}: status={result.status.value} exit={result.exit_code} "
        f"{first_error[:120]}"
    ).rstrip()


def build_debug_prompt(state: FeedbackState, context: FeedbackContext) -> CompletionRequest:
    """Assemble the debug request: requirement excerpt, design excerpt, the
    current code, the last attempt's stderr (tail-capped), then one-line
    summaries of every earlier attempt."""
    if not state.attempts:
        raise ValueError("build_debug_prompt requires at least one attempt")
    last = state.attempts[-1]
    if last.ok:
        raise ValueError("build_debug_prompt requires a failing last attempt")
    earlier = state.attempts[:-1]
    parts = [
        "The requirement:",
        _excerpt(context.requirement) or "(not recorded)",
        "",
        "The design:",
        _excerpt(context.design) or "(not recorded)",
        "",
        f"The current content of `{state.artifact.file_name}`:",
        f"```{state.artifact.language_tag}",
        state.artifact.code,
        "```",
        "",
        "The test run failed. Full error output of the last attempt:",
        _tail(last.stderr) or "(no stderr captured)",
    ]
    if earlier:
        parts += ["", "Earlier attempts:"]
        parts += [_attempt_summary(i, res) for i, res in enumerate(earlier)]
    parts += [
        "",
        f"Respond with a single fenced code block containing the complete revised `{state.artifact.file_name}`.",
    ]
    return CompletionRequest(
        system_prompt=DEBUG_SYSTEM_PROMPT,
        user_prompt="\n".join(parts),
        tag=(context.role_name, ActionKind.DEBUG_CODE),
    )


def _request_revision(gateway: Gateway, req: CompletionRequest, state: FeedbackState) -> str:
    """One completion with a single re-ask when no code fence comes back."""
    try:
        text, _ = gateway.complete(req)
        blocks = extract_code_blocks(text)
        if not blocks:
            retry = replace(req, user_prompt="Your previous response contained no fenced code block."
                            "\n\n" + req.user_prompt)
            text, _ = gateway.complete(retry)
            blocks = extract_code_blocks(text)
        if not blocks:
            raise NoCodeBlock(f"debug response for {state.artifact.file_name} contained no code block")
        return blocks[0][1]
    except (TransportError, ProviderError, PlaybookExhausted) as exc:
        raise BackendFailure("Engineer", ActionKind.DEBUG_CODE.token, exc, state=state) from exc


def _persist_attempt(root: Path, state: FeedbackState, result: ExecutionResult, attempt: int) -> None:
    attempt_dir = root / state.artifact.file_name / f"attempt_{attempt}"
    attempt_dir.mkdir(parents=True, exist_ok=True)
    code = state.artifact.code if state.artifact.code.endswith("\n") else state.artifact.code + "\n"
    (attempt_dir / Path(state.artifact.file_name).name).write_text(code, encoding="utf-8")
    (attempt_dir / "result.json").write_text(
        json.dumps(result.to_payload(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def feedback_loop(
    artifact: CodeArtifact,
    tests: CodeArtifact,
    context: FeedbackContext,
    gateway: Gateway,
    sandbox: Sandbox,
    limits: ExecLimits | None = None,
    persist_root: Path | None = None,
) -> FeedbackState:
    """Run the tests, and on failure ask the backend for a revised file,
    up to MAX_DEBUG_RETRIES debug cycles.  Every attempt's ExecutionResult is
    retained, and each revision bumps the artifact revision by exactly one."""
    if not artifact.code.strip():
        raise EmptyContent(f"artifact {artifact.file_name} has no code")
    if not tests.code.strip():
        raise EmptyContent(f"tests {tests.file_name} have no code")
    if sandbox is None:
        raise SandboxUnavailable("feedback_loop needs a sandbox executor")

    extra = tuple(
        a for a in context.code_files if a.file_name not in (artifact.file_name, tests.file_name)
    )
    state = FeedbackState(artifact=artifact)
    for attempt in range(MAX_DEBUG_RETRIES + 1):
        if attempt > 0:
            code = _request_revision(gateway, build_debug_prompt(state, context), state)
            state.artifact = replace(
                state.artifact, code=code, revision=state.artifact.revision + 1, status=CodeStatus.DRAFT
            )
            state.retries_used = attempt
        result = sandbox.execute_tests(state.artifact, tests, limits, extra_files=extra)
        state.attempts.append(result)
        if persist_root is not None:
            _persist_attempt(Path(persist_root), state, result, attempt)
        if result.ok:
            state.status = FeedbackStatus.PASSED
            state.artifact = replace(state.artifact, status=CodeStatus.TESTED_PASS)
            return state
    state.status = FeedbackStatus.FAILED
    state.artifact = replace(state.artifact, status=CodeStatus.TESTED_FAIL)
    return state
