"""Evaluation bench: the unbiased pass@k estimator, benchmark-sample
execution, and the desk-scale statistical indices (code stats, productivity,
recorded human scores)."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DomainError,
    NoSourceFiles,
    RangeError,
    SampleCountTooSmall,
    ZeroLines,
)
from .sandbox import ExecLimits, ExecutionResult, Sandbox
from .types import CodeArtifact


def pass_at_k(n: int, c: int, k: int) -> float:
    """Probability that at least one of k draws (without replacement) from n
    samples with c correct ones is correct: 1 - C(n-c, k) / C(n, k).

    Computed in product form for numerical stability; the boundary cases
    c = 0, c = n and n - c < k are returned exactly.
    """
    if n < 1 or not 1 <= k <= n or not 0 <= c <= n:
        raise DomainError(f"pass_at_k requires 1 <= k <= n and 0 <= c <= n, got n={n} c={c} k={k}")
    if n - c < k:
        return 1.0
    if c == 0:
        return 0.0
    miss = 1.0
    for i in range(k):
        miss *= (n - c - i) / (n - i)
    return 1.0 - miss


@dataclass(frozen=True)
class BenchTask:
    """One benchmark problem: a prompt, an assertion program, and the name of
    the function the assertions call."""

    task_id: str
    prompt: str
    test: str
    entry_point: str


def load_tasks(path: Path) -> list[BenchTask]:
    tasks = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                tasks.append(
                    BenchTask(
                        task_id=record["task_id"],
                        prompt=record.get("prompt", ""),
                        test=record["test"],
                        entry_point=record["entry_point"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"bad task record at line {line_no}: {exc}") from exc
    return tasks


def load_samples(path: Path) -> dict[str, list[str]]:
    """Read per-task completions: lines with either a single ``completion``
    or a ``samples`` list, appended in file order."""
    samples: dict[str, list[str]] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                bucket = samples.setdefault(record["task_id"], [])
                if "samples" in record:
                    bucket.extend(record["samples"])
                else:
                    bucket.append(record["completion"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"bad sample record at line {line_no}: {exc}") from exc
    return samples


@dataclass
class EvalRecord:
    task_id: str
    n: int
    c: int
    results: list[ExecutionResult]


@dataclass
class EvalReport:
    records: list[EvalRecord]
    ks: list[int]
    per_task: dict[str, dict[int, float]]
    aggregate: dict[int, float]

    def to_tsv(self) -> str:
        header = ["task_id", "n", "c"] + [f"pass@{k}" for k in self.ks]
        lines = ["\t".join(header)]
        for record in self.records:
            row = [record.task_id, str(record.n), str(record.c)]
            row += [f"{self.per_task[record.task_id][k]:.6f}" for k in self.ks]
            lines.append("\t".join(row))
        lines.append(
            "\t".join(["aggregate", "", ""] + [f"{self.aggregate[k]:.6f}" for k in self.ks])
        )
        return "\n".join(lines)

    def to_payload(self) -> dict:
        return {
            "ks": self.ks,
            "aggregate": {str(k): v for k, v in self.aggregate.items()},
            "tasks": [
                {
                    "task_id": r.task_id,
                    "n": r.n,
                    "c": r.c,
                    "pass_at_k": {str(k): self.per_task[r.task_id][k] for k in self.ks},
                }
                for r in self.records
            ],
        }


def _candidate_program(task: BenchTask, sample: str) -> str:
    return f"{sample}\n\n{task.test}\n\ncheck({task.entry_point})\n"


def evaluate_samples(
    tasks: Sequence[BenchTask],
    completions: Mapping[str, Sequence[str]],
    sandbox: Sandbox,
    ks: Iterable[int],
    limits: ExecLimits | None = None,
) -> EvalReport:
    """Run every sample against its task's tests, count correct ones, and
    average pass@k over tasks."""
    ks = sorted(set(int(k) for k in ks))
    if not ks:
        raise DomainError("at least one k is required")
    k_max = max(ks)
    for task in tasks:
        n = len(completions.get(task.task_id, ()))
        if n < k_max:
            raise SampleCountTooSmall(task.task_id, n, k_max)

    jobs = [
        (task, sample_idx, sample)
        for task in tasks
        for sample_idx, sample in enumerate(completions[task.task_id])
    ]

    def _run(job):
        task, idx, sample = job
        artifact = CodeArtifact(file_name="candidate.py", code=_candidate_program(task, sample))
        return task.task_id, idx, sandbox.execute_raw([artifact], [sandbox.interpreter, "candidate.py"], limits)

    outcomes: dict[str, list[ExecutionResult | None]] = {
        task.task_id: [None] * len(completions[task.task_id]) for task in tasks
    }
    with ThreadPoolExecutor(max_workers=4) as pool:
        for task_id, idx, result in pool.map(_run, jobs):
            outcomes[task_id][idx] = result

    records = []
    per_task: dict[str, dict[int, float]] = {}
    for task in tasks:
        results = outcomes[task.task_id]
        c = sum(1 for r in results if r is not None and r.ok)
        record = EvalRecord(task_id=task.task_id, n=len(results), c=c, results=list(results))
        records.append(record)
        per_task[task.task_id] = {k: pass_at_k(record.n, record.c, k) for k in ks}
    aggregate = {k: sum(per_task[t.task_id][k] for t in tasks) / len(tasks) for k in ks} if tasks else {}
    return EvalReport(records=records, ks=ks, per_task=per_task, aggregate=aggregate)


# -- statistical indices -------------------------------------------------------


def count_lines(text: str) -> int:
    """Physical newline-delimited lines, excluding a single trailing empty
    line; a last line without a newline still counts."""
    if not text:
        return 0
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return len(lines)


@dataclass(frozen=True)
class CodeStats:
    code_files: int
    lines_per_file: float
    total_lines: int


def code_stats(src_dir: Path, extensions: Sequence[str] = (".py",)) -> CodeStats:
    src_dir = Path(src_dir)
    files = sorted(
        p for p in src_dir.rglob("*") if p.is_file() and p.suffix in set(extensions)
    )
    if not files:
        raise NoSourceFiles(f"no source files with extensions {list(extensions)} under {src_dir}")
    total = sum(count_lines(p.read_text(encoding="utf-8", errors="replace")) for p in files)
    return CodeStats(code_files=len(files), lines_per_file=total / len(files), total_lines=total)


def productivity(token_usage: int, total_lines: float) -> float:
    """Token usage divided by generated code lines (lower is better)."""
    if total_lines <= 0:
        raise ZeroLines("productivity needs a positive line count")
    return token_usage / total_lines


@dataclass(frozen=True)
class StatRow:
    """One project's statistical indices; executability and human_revisions
    are recorded human inputs, never computed."""

    running_time: float
    token_usage: int
    code_files: int
    lines_per_file: float
    total_lines: int
    productivity: float
    executability: float | None = None
    human_revisions: float | None = None

    def to_payload(self) -> dict:
        return {
            "executability": self.executability,
            "running_time": self.running_time,
            "token_usage": self.token_usage,
            "code_files": self.code_files,
            "lines_per_file": self.lines_per_file,
            "total_lines": self.total_lines,
            "productivity": self.productivity,
            "human_revisions": self.human_revisions,
        }


def record_human_scores(row: StatRow, executability: float, revisions: float) -> StatRow:
    if not 1.0 <= executability <= 4.0:
        raise RangeError(f"executability must be in [1, 4], got {executability}")
    if revisions < 0:
        raise RangeError(f"human revisions must be non-negative, got {revisions}")
    return replace(row, executability=executability, human_revisions=revisions)


def build_stat_row(workspace: Path, extensions: Sequence[str] = (".py",)) -> StatRow:
    """Derive the computable indices from a finished workspace (ledger.json
    plus the src tree)."""
    workspace = Path(workspace)
    ledger_path = workspace / "ledger.json"
    if not ledger_path.exists():
        raise FileNotFoundError(f"no ledger at {ledger_path}")
    ledger = json.loads(ledger_path.read_text(encoding="utf-8"))
    totals = ledger.get("totals", {})
    tokens = int(totals.get("prompt_tokens", 0)) + int(totals.get("completion_tokens", 0))
    seconds = float(totals.get("seconds", 0.0))
    stats = code_stats(workspace / "src", extensions)
    return StatRow(
        running_time=seconds,
        token_usage=tokens,
        code_files=stats.code_files,
        lines_per_file=stats.lines_per_file,
        total_lines=stats.total_lines,
        productivity=productivity(tokens, stats.total_lines),
    )
