"""Executable-feedback loop: retry cap, revision bookkeeping, debug prompts."""

import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sopforge.errors import BackendFailure, EmptyContent, SandboxUnavailable
from sopforge.feedback import (
    MAX_DEBUG_RETRIES,
    STDERR_TRUNCATION_MARKER,
    FeedbackContext,
    FeedbackState,
    FeedbackStatus,
    build_debug_prompt,
    feedback_loop,
)
from sopforge.sandbox import ExecutionResult, SandboxStatus
from sopforge.types import ActionKind, CodeArtifact, CodeStatus

from sample_docs import COUNTER_MODULE, COUNTER_TESTS_PASSING

BUGGY_COUNTER = """\
class Counter:
    def __init__(self, start: int = 0):
        self.value = start

    def increment(self, amount: int = 1):
        self.value += amount + 1  # off by one
        return self.value

    def reset(self):
        self.value = 0
"""


def fenced(code):
    return f"Here is the revised file:\n\n```python\n{code}```\n"


def _ctx():
    return FeedbackContext(requirement="build a counter", design="one Counter class")


def _artifact(code=BUGGY_COUNTER):
    return CodeArtifact(file_name="counter.py", code=code)


def _tests():
    return CodeArtifact(file_name="test_counter.py", code=COUNTER_TESTS_PASSING)


class TestFeedbackLoop:
    def test_pass_on_first_run(self, sandbox, gateway_factory):
        state = feedback_loop(_artifact(COUNTER_MODULE), _tests(), _ctx(), gateway_factory([]), sandbox)
        assert state.status is FeedbackStatus.PASSED
        assert state.retries_used == 0
        assert len(state.attempts) == 1
        assert state.artifact.status is CodeStatus.TESTED_PASS

    def test_fix_on_second_debug_response(self, sandbox, gateway_factory):
        gateway = gateway_factory([fenced(BUGGY_COUNTER), fenced(COUNTER_MODULE)])
        state = feedback_loop(_artifact(), _tests(), _ctx(), gateway, sandbox)
        assert state.status is FeedbackStatus.PASSED
        assert state.retries_used == 2
        assert len(state.attempts) == 3
        assert state.artifact.revision == 2
        # the stored artifact is exactly the passing code (fence extraction
        # cannot carry the final newline)
        assert state.artifact.code == COUNTER_MODULE.rstrip("\n")
        assert gateway.ledger.calls == 2

    def test_never_fixed_stops_after_four_executions(self, sandbox, gateway_factory):
        gateway = gateway_factory([fenced(BUGGY_COUNTER)] * MAX_DEBUG_RETRIES)
        state = feedback_loop(_artifact(), _tests(), _ctx(), gateway, sandbox)
        assert state.status is FeedbackStatus.FAILED
        assert state.retries_used == 3
        assert len(state.attempts) == 4
        assert state.artifact.status is CodeStatus.TESTED_FAIL

    def test_revision_tracks_retries_at_every_point(self, sandbox, gateway_factory):
        gateway = gateway_factory([fenced(BUGGY_COUNTER)] * MAX_DEBUG_RETRIES)
        state = feedback_loop(_artifact(), _tests(), _ctx(), gateway, sandbox)
        assert state.artifact.revision == state.retries_used == 3

    def test_empty_artifact_rejected(self, sandbox, gateway_factory):
        with pytest.raises(EmptyContent):
            feedback_loop(
                CodeArtifact(file_name="a.py", code="  "), _tests(), _ctx(), gateway_factory([]), sandbox
            )

    def test_missing_sandbox(self, gateway_factory):
        with pytest.raises(SandboxUnavailable):
            feedback_loop(_artifact(), _tests(), _ctx(), gateway_factory([]), None)

    def test_backend_failure_carries_pending_state(self, sandbox, gateway_factory):
        gateway = gateway_factory([])  # nothing scripted: first debug request explodes
        with pytest.raises(BackendFailure) as exc:
            feedback_loop(_artifact(), _tests(), _ctx(), gateway, sandbox)
        assert exc.value.state is not None
        assert exc.value.state.status is FeedbackStatus.PENDING
        assert len(exc.value.state.attempts) == 1

    def test_attempts_persisted(self, sandbox, gateway_factory, tmp_path):
        gateway = gateway_factory([fenced(COUNTER_MODULE)])
        state = feedback_loop(
            _artifact(), _tests(), _ctx(), gateway, sandbox, persist_root=tmp_path / "feedback"
        )
        assert state.status is FeedbackStatus.PASSED
        attempt_dirs = sorted(p.name for p in (tmp_path / "feedback" / "counter.py").iterdir())
        assert attempt_dirs == ["attempt_0", "attempt_1"]
        result = json.loads((tmp_path / "feedback" / "counter.py" / "attempt_0" / "result.json").read_text())
        assert result["status"] == "non_zero_exit"
        snapshot = (tmp_path / "feedback" / "counter.py" / "attempt_1" / "counter.py").read_text()
        assert snapshot == COUNTER_MODULE

    @settings(
        max_examples=8,
        deadline=None,
        suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
    )
    @given(fixes=st.lists(st.booleans(), min_size=0, max_size=5))
    def test_execution_count_never_exceeds_four(self, sandbox, gateway_factory, fixes):
        responses = [fenced(COUNTER_MODULE if fix else BUGGY_COUNTER) for fix in fixes]
        # pad so the backend never runs dry inside the loop
        responses += [fenced(BUGGY_COUNTER)] * MAX_DEBUG_RETRIES
        state = feedback_loop(_artifact(), _tests(), _ctx(), gateway_factory(responses), sandbox)
        assert 1 <= len(state.attempts) <= MAX_DEBUG_RETRIES + 1
        assert state.status in (FeedbackStatus.PASSED, FeedbackStatus.FAILED)
        if state.status is FeedbackStatus.PASSED:
            assert state.attempts[-1].ok


def _failed_result(stderr, exit_code=1):
    return ExecutionResult(
        status=SandboxStatus.NON_ZERO_EXIT,
        exit_code=exit_code,
        stdout="",
        stderr=stderr,
        duration=0.01,
    )


class TestBuildDebugPrompt:
    def test_single_failure_embeds_stderr_verbatim(self):
        state = FeedbackState(artifact=_artifact())
        state.attempts.append(_failed_result("AssertionError: 3 != 4"))
        req = build_debug_prompt(state, _ctx())
        assert "AssertionError: 3 != 4" in req.user_prompt
        assert "build a counter" in req.user_prompt
        assert "one Counter class" in req.user_prompt
        assert req.tag == ("Engineer", ActionKind.DEBUG_CODE)

    def test_three_failures_summarize_earlier_two(self):
        state = FeedbackState(artifact=_artifact())
        state.attempts += [
            _failed_result("first boom"),
            _failed_result("second boom"),
            _failed_result("third boom"),
        ]
        prompt = build_debug_prompt(state, _ctx()).user_prompt
        assert "third boom" in prompt
        assert "attempt 0" in prompt and "first boom" in prompt
        assert "attempt 1" in prompt and "second boom" in prompt
        assert "attempt 2" not in prompt

    def test_long_stderr_tail_truncated_with_marker(self):
        stderr = "x" * 6000 + "TAIL-SENTINEL"
        state = FeedbackState(artifact=_artifact())
        state.attempts.append(_failed_result(stderr))
        prompt = build_debug_prompt(state, _ctx()).user_prompt
        assert STDERR_TRUNCATION_MARKER in prompt
        assert "TAIL-SENTINEL" in prompt
        start = prompt.index(STDERR_TRUNCATION_MARKER) + len(STDERR_TRUNCATION_MARKER)
        kept = prompt[start:].split("\n", 1)[1].split("\n\nRespond with")[0]
        assert len(kept) <= 4000

    def test_requires_a_failing_attempt(self):
        state = FeedbackState(artifact=_artifact())
        with pytest.raises(ValueError):
            build_debug_prompt(state, _ctx())
