"""Isolated execution of generated programs: fresh directory per run, scrubbed
environment, output caps, and process-tree kill on timeout.

Isolation is directory + environment based; no OS container is involved, so
this is a safety net for accidents, not a security boundary.
"""

from __future__ import annotations

import json
import os
import shutil
import signal
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .types import CodeArtifact

# Environment variables the child may inherit. Everything else (API keys,
# proxies, cloud credentials) is dropped.
ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL", "TMPDIR", "TERM", "SYSTEMROOT")

TRUNCATION_MARKER = "\n...[output truncated]"
RUN_DIR_TOKEN = "<rundir>"

DEFAULT_MAX_CONCURRENCY = 4


class SandboxStatus(Enum):
    OK = "ok"
    NON_ZERO_EXIT = "non_zero_exit"
    TIMED_OUT = "timed_out"
    SPAWN_ERROR = "spawn_error"


@dataclass(frozen=True)
class ExecLimits:
    timeout: float = 30.0
    max_output_bytes: int = 1_048_576

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_output_bytes <= 0:
            raise ValueError("max_output_bytes must be positive")


@dataclass(frozen=True)
class ExecutionResult:
    status: SandboxStatus
    exit_code: int | None
    stdout: str
    stderr: str
    duration: float
    test_counts: tuple[int, int, int] | None = None
    work_dir: str = ""

    @property
    def ok(self) -> bool:
        return self.status is SandboxStatus.OK

    def to_payload(self) -> dict:
        return {
            "status": self.status.value,
            "exit_code": self.exit_code,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "duration": self.duration,
            "test_counts": list(self.test_counts) if self.test_counts else None,
        }


def _truncate(data: bytes, limit: int) -> tuple[str, bool]:
    truncated = len(data) > limit
    if truncated:
        data = data[:limit]
    return data.decode("utf-8", errors="replace"), truncated


def _scrubbed_env() -> dict[str, str]:
    return {k: v for k, v in os.environ.items() if k in ENV_ALLOWLIST} | {
        "PYTHONDONTWRITEBYTECODE": "1",
        "PYTHONIOENCODING": "utf-8",
        "PYTHONHASHSEED": "0",
    }


class Sandbox:
    """Executes artifact sets in throwaway directories.

    A bounded semaphore caps concurrent child processes; each call owns its
    directory exclusively, so calls may run from any number of threads.
    """

    def __init__(
        self,
        limits: ExecLimits | None = None,
        interpreter: str | None = None,
        harness: str | Path | None = None,
        max_concurrency: int = DEFAULT_MAX_CONCURRENCY,
    ):
        self.limits = limits or ExecLimits()
        self.interpreter = interpreter or sys.executable
        self.harness = Path(harness) if harness else None
        self._sem = threading.BoundedSemaphore(max_concurrency)

    def execute_raw(
        self,
        files: Sequence[CodeArtifact],
        entry_command: Sequence[str],
        limits: ExecLimits | None = None,
    ) -> ExecutionResult:
        """Materialize the artifacts into a fresh directory, run the command
        there, and capture the outcome.  The run directory path is scrubbed
        from captured output (it is deleted afterwards and would otherwise
        make logs unreproducible)."""
        if not entry_command:
            raise ValueError("entry_command must be non-empty")
        limits = limits or self.limits
        run_dir = Path(tempfile.mkdtemp(prefix="sopforge_run_"))
        try:
            for artifact in files:
                target = run_dir / artifact.file_name
                target.parent.mkdir(parents=True, exist_ok=True)
                code = artifact.code if artifact.code.endswith("\n") else artifact.code + "\n"
                target.write_text(code, encoding="utf-8")
            with self._sem:
                return self._spawn(list(entry_command), run_dir, limits)
        finally:
            shutil.rmtree(run_dir, ignore_errors=True)

    def _spawn(self, command: list[str], run_dir: Path, limits: ExecLimits) -> ExecutionResult:
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                command,
                cwd=run_dir,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                env=_scrubbed_env(),
                start_new_session=True,
            )
        except (FileNotFoundError, PermissionError, OSError) as exc:
            return ExecutionResult(
                status=SandboxStatus.SPAWN_ERROR,
                exit_code=None,
                stdout="",
                stderr=f"failed to spawn {command[0]!r}: {exc}",
                duration=time.monotonic() - start,
                work_dir=str(run_dir),
            )
        timed_out = False
        try:
            out, err = proc.communicate(timeout=limits.timeout)
        except subprocess.TimeoutExpired:
            timed_out = True
            self._kill_tree(proc)
            out, err = proc.communicate()
        duration = time.monotonic() - start
        if timed_out:
            duration = max(duration, limits.timeout)
        stdout, out_trunc = _truncate(out or b"", limits.max_output_bytes)
        stderr, err_trunc = _truncate(err or b"", limits.max_output_bytes)
        if out_trunc:
            stdout += TRUNCATION_MARKER
        if err_trunc:
            stderr += TRUNCATION_MARKER
        stdout = stdout.replace(str(run_dir), RUN_DIR_TOKEN)
        stderr = stderr.replace(str(run_dir), RUN_DIR_TOKEN)
        if timed_out:
            status = SandboxStatus.TIMED_OUT
            exit_code = None
        else:
            exit_code = proc.returncode
            status = SandboxStatus.OK if exit_code == 0 else SandboxStatus.NON_ZERO_EXIT
        return ExecutionResult(
            status=status,
            exit_code=exit_code,
            stdout=stdout,
            stderr=stderr,
            duration=duration,
            work_dir=str(run_dir),
        )

    @staticmethod
    def _kill_tree(proc: subprocess.Popen) -> None:
        try:
            os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
        except (ProcessLookupError, PermissionError, OSError):
            proc.kill()

    def execute_tests(
        self,
        module: CodeArtifact,
        tests: CodeArtifact,
        limits: ExecLimits | None = None,
        extra_files: Sequence[CodeArtifact] = (),
    ) -> ExecutionResult:
        """Run the tests against the module.

        When a harness program is configured and present, it is delegated to
        and its one-line JSON report fills test_counts; otherwise the test
        file runs directly and pass/fail comes from the exit code alone.
        ``extra_files`` materializes sibling modules the code under test
        imports.
        """
        named = {module.file_name: module, tests.file_name: tests}
        files = [module, tests] + [a for a in extra_files if a.file_name not in named]
        if self.harness is not None and self.harness.exists():
            command = [
                self.interpreter,
                str(self.harness),
                "--module",
                module.file_name,
                "--tests",
                tests.file_name,
            ]
            result = self.execute_raw(files, command, limits)
            return self._attach_counts(result)
        return self.execute_raw(files, [self.interpreter, tests.file_name], limits)

    @staticmethod
    def _attach_counts(result: ExecutionResult) -> ExecutionResult:
        lines = [line for line in result.stdout.splitlines() if line.strip()]
        if not lines:
            return result
        try:
            report = json.loads(lines[-1])
            counts = (int(report["passed"]), int(report["failed"]), int(report["errored"]))
        except (ValueError, KeyError, TypeError):
            return result
        return ExecutionResult(
            status=result.status,
            exit_code=result.exit_code,
            stdout=result.stdout,
            stderr=result.stderr,
            duration=result.duration,
            test_counts=counts,
            work_dir=result.work_dir,
        )
