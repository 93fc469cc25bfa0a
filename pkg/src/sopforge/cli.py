"""Operator command line: run the pipeline, evaluate pass@k, compute project
stats, and replay message logs.

Exit codes: 0 success, 1 unexpected error, 3 round limit exceeded,
64 usage error, 65 data format error, 66 missing input files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .config import load_config
from .engine import ROLE_ORDER, build_pipeline, run
from .errors import (
    CorruptLog,
    IdeaEmpty,
    NoSourceFiles,
    RangeError,
    RoundLimitExceeded,
    SampleCountTooSmall,
    SopforgeError,
)
from .gateway import CostLedger, Gateway, HttpProvider, Playbook
from .pool import read_message_log

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ROUND_LIMIT = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NOINPUT = 66


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit with 64 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sopforge", description="SOP-driven multi-agent software pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the pipeline on an idea")
    p_run.add_argument("--idea", required=True, help="the user requirement to build")
    p_run.add_argument("--workspace", default="workspace", help="output directory")
    p_run.add_argument("--config", default=None, help="TOML config file")
    p_run.add_argument(
        "--roles",
        default=",".join(ROLE_ORDER),
        help="comma-separated role subset (default: all five)",
    )
    p_run.add_argument("--backend", choices=("live", "playbook"), default="live")
    p_run.add_argument("--playbook", default=None, help="playbook JSONL (required with --backend playbook)")
    p_run.add_argument("--max-rounds", type=int, default=None)

    p_eval = sub.add_parser("eval-passk", help="evaluate pass@k over sampled completions")
    p_eval.add_argument("--tasks", required=True, help="benchmark tasks JSONL")
    p_eval.add_argument("--samples", required=True, help="per-task completions JSONL")
    p_eval.add_argument("--k", default="1", help="comma-separated k values")
    p_eval.add_argument("--out", default="passk_summary.json", help="JSON summary path")
    p_eval.add_argument("--config", default=None)

    p_stats = sub.add_parser("stats", help="statistical indices for a finished workspace")
    p_stats.add_argument("--workspace", required=True)
    p_stats.add_argument("--executability", type=float, default=None, help="human score in [1, 4]")
    p_stats.add_argument("--revisions", type=float, default=None, help="human revision count")

    p_replay = sub.add_parser("replay", help="print a workspace message log in seq order")
    p_replay.add_argument("--workspace", required=True)
    return parser


def _cmd_run(args) -> int:
    config = load_config(Path(args.config) if args.config else None)
    if args.backend == "playbook":
        if not args.playbook:
            print("sopforge run: error: --playbook is required with --backend playbook", file=sys.stderr)
            return EXIT_USAGE
        try:
            provider = Playbook.from_file(Path(args.playbook))
        except (OSError, ValueError) as exc:
            print(f"sopforge run: cannot load playbook: {exc}", file=sys.stderr)
            return EXIT_DATA
    else:
        if not config.backend.base_url or not config.backend.model:
            print(
                "sopforge run: live backend needs backend.base_url and backend.model in the config",
                file=sys.stderr,
            )
            return EXIT_ERROR
        provider = HttpProvider(
            base_url=config.backend.base_url,
            model=config.backend.model,
            timeout=config.backend.timeout,
        )
    gateway = Gateway(provider=provider, ledger=CostLedger(price_per_1k=config.pricing))
    sandbox = config.sandbox.build()
    try:
        pipeline = build_pipeline(
            role_keys=[token for token in args.roles.split(",") if token.strip()],
            workspace=args.workspace,
            max_rounds=args.max_rounds or config.max_rounds,
            prompt_overrides=config.prompt_overrides,
        )
    except ValueError as exc:
        print(f"sopforge run: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run(pipeline, args.idea, gateway, sandbox)
    except IdeaEmpty as exc:
        print(f"sopforge run: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RoundLimitExceeded as exc:
        print(f"sopforge run: {exc}", file=sys.stderr)
        if exc.partial is not None:
            _print_run_summary(exc.partial)
        return EXIT_ROUND_LIMIT
    except SopforgeError as exc:
        print(f"sopforge run: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _print_run_summary(result)
    return EXIT_OK if result.completed else EXIT_ERROR


def _print_run_summary(result) -> None:
    ledger = result.ledger
    print(f"workspace: {result.workspace}")
    print(f"completed: {result.completed} (rounds: {result.rounds})")
    print(f"documents: {', '.join(d.kind.value for d in result.documents) or 'none'}")
    print(f"code files: {', '.join(a.file_name for a in result.code_files) or 'none'}")
    passed = sum(1 for r in result.test_reports if r.status == "passed")
    print(f"test reports: {len(result.test_reports)} ({passed} passed)")
    print(
        f"ledger: {ledger.calls} calls, {ledger.prompt_tokens} prompt + "
        f"{ledger.completion_tokens} completion tokens, {ledger.seconds:.2f}s"
    )


def _cmd_eval_passk(args) -> int:
    config = load_config(Path(args.config) if args.config else None)
    try:
        tasks = bench.load_tasks(Path(args.tasks))
        samples = bench.load_samples(Path(args.samples))
        ks = [int(k) for k in args.k.split(",") if k.strip()]
    except FileNotFoundError as exc:
        print(f"sopforge eval-passk: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except ValueError as exc:
        print(f"sopforge eval-passk: {exc}", file=sys.stderr)
        return EXIT_DATA
    sandbox = config.sandbox.build()
    try:
        report = bench.evaluate_samples(tasks, samples, sandbox, ks)
    except SampleCountTooSmall as exc:
        print(f"sopforge eval-passk: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(report.to_tsv())
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report.to_payload(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"summary written to {out}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    workspace = Path(args.workspace)
    try:
        row = bench.build_stat_row(workspace)
    except NoSourceFiles as exc:
        print(f"sopforge stats: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except FileNotFoundError as exc:
        print(f"sopforge stats: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.executability is not None or args.revisions is not None:
        try:
            row = bench.record_human_scores(
                row,
                args.executability if args.executability is not None else 1.0,
                args.revisions if args.revisions is not None else 0.0,
            )
        except RangeError as exc:
            print(f"sopforge stats: {exc}", file=sys.stderr)
            return EXIT_USAGE
    for key, value in row.to_payload().items():
        rendered = "-" if value is None else (f"{value:.4f}" if isinstance(value, float) else value)
        print(f"{key}\t{rendered}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    log_path = Path(args.workspace) / "logs" / "messages.jsonl"
    if not log_path.exists():
        print(f"sopforge replay: no message log at {log_path}", file=sys.stderr)
        return EXIT_NOINPUT
    try:
        records = read_message_log(log_path)
    except CorruptLog as exc:
        print(f"sopforge replay: {exc}", file=sys.stderr)
        return EXIT_DATA
    for record in records:
        recipients = ",".join(record.get("send_to") or []) or "*"
        content = record["content"]
        summary = content if isinstance(content, str) else json.dumps(content)
        summary = " ".join(summary.split())
        if len(summary) > 96:
            summary = summary[:96] + "..."
        print(
            f"[{record['seq']:>4}] {record['sent_from']} ({record['cause_by']}) -> {recipients}: {summary}"
        )
    print(f"{len(records)} messages")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "eval-passk": _cmd_eval_passk,
        "stats": _cmd_stats,
        "replay": _cmd_replay,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
