"""Command-line surface: flows and exit-code mapping."""

import json

import pytest

from sopforge import demo
from sopforge.cli import main

GOOD_SAMPLE = "def double(x):\n    return x * 2\n"
BAD_SAMPLE = "def double(x):\n    return x * 3\n"
TASK_TEST = "def check(candidate):\n    assert candidate(2) == 4\n"


@pytest.fixture
def demo_playbook(tmp_path):
    return str(demo.write_playbook(tmp_path / "playbook.jsonl"))


def _run_main(argv):
    try:
        return main(argv)
    except SystemExit as exc:  # argparse usage paths
        return exc.code


class TestCmdRun:
    def test_playbook_run_populates_workspace(self, tmp_path, demo_playbook, capsys):
        ws = tmp_path / "ws"
        code = _run_main(
            [
                "run",
                "--idea",
                demo.DEMO_IDEA,
                "--workspace",
                str(ws),
                "--backend",
                "playbook",
                "--playbook",
                demo_playbook,
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "completed: True" in out
        assert (ws / "docs" / "prd.md").exists()
        assert (ws / "src" / "main.py").exists()

    def test_missing_idea_is_usage_error(self, tmp_path):
        assert _run_main(["run", "--workspace", str(tmp_path)]) == 64

    def test_playbook_backend_requires_playbook_flag(self, tmp_path):
        code = _run_main(
            ["run", "--idea", "x", "--workspace", str(tmp_path), "--backend", "playbook"]
        )
        assert code == 64

    def test_engineer_only_roles_flag(self, tmp_path, capsys):
        ws = tmp_path / "ws"
        playbook = tmp_path / "engineer.jsonl"
        playbook.write_text(
            json.dumps({"response": "```python\nprint('hi')\n```"}) + "\n"
        )
        code = _run_main(
            [
                "run",
                "--idea",
                "print hi",
                "--workspace",
                str(ws),
                "--backend",
                "playbook",
                "--playbook",
                str(playbook),
                "--roles",
                "engineer",
            ]
        )
        assert code == 0
        assert not (ws / "docs").exists()
        assert (ws / "src" / "main.py").exists()

    def test_live_backend_without_config_fails_cleanly(self, tmp_path):
        code = _run_main(["run", "--idea", "x", "--workspace", str(tmp_path)])
        assert code == 1


class TestCmdEvalPassk:
    def _write_fixtures(self, tmp_path, samples):
        tasks = tmp_path / "tasks.jsonl"
        tasks.write_text(
            json.dumps(
                {"task_id": "t", "prompt": "double", "test": TASK_TEST, "entry_point": "double"}
            )
            + "\n"
        )
        samples_path = tmp_path / "samples.jsonl"
        samples_path.write_text(json.dumps({"task_id": "t", "samples": samples}) + "\n")
        return tasks, samples_path

    def test_known_counts_match_estimator(self, tmp_path, capsys):
        tasks, samples = self._write_fixtures(tmp_path, [GOOD_SAMPLE, BAD_SAMPLE])
        out_path = tmp_path / "summary.json"
        code = _run_main(
            ["eval-passk", "--tasks", str(tasks), "--samples", str(samples), "--k", "1,2", "--out", str(out_path)]
        )
        assert code == 0
        summary = json.loads(out_path.read_text())
        assert summary["tasks"][0]["n"] == 2
        assert summary["tasks"][0]["c"] == 1
        assert summary["aggregate"]["1"] == pytest.approx(0.5)
        assert summary["aggregate"]["2"] == pytest.approx(1.0)
        table = capsys.readouterr().out
        assert "pass@1" in table and "pass@2" in table

    def test_k_one_with_single_sample_is_valid(self, tmp_path):
        tasks, samples = self._write_fixtures(tmp_path, [GOOD_SAMPLE])
        assert _run_main(["eval-passk", "--tasks", str(tasks), "--samples", str(samples), "--k", "1", "--out", str(tmp_path / "s.json")]) == 0

    def test_k_larger_than_samples(self, tmp_path):
        tasks, samples = self._write_fixtures(tmp_path, [GOOD_SAMPLE])
        code = _run_main(
            ["eval-passk", "--tasks", str(tasks), "--samples", str(samples), "--k", "10", "--out", str(tmp_path / "s.json")]
        )
        assert code == 65

    def test_malformed_tasks_file(self, tmp_path):
        tasks = tmp_path / "tasks.jsonl"
        tasks.write_text("not json\n")
        samples = tmp_path / "samples.jsonl"
        samples.write_text(json.dumps({"task_id": "t", "samples": [GOOD_SAMPLE]}) + "\n")
        assert _run_main(["eval-passk", "--tasks", str(tasks), "--samples", str(samples)]) == 65


class TestCmdStats:
    def _workspace(self, tmp_path):
        ws = tmp_path / "ws"
        (ws / "src").mkdir(parents=True)
        (ws / "src" / "m.py").write_text("a\nb\nc\nd\n")
        (ws / "ledger.json").write_text(
            '{"totals": {"prompt_tokens": 70, "completion_tokens": 30, "seconds": 2.0}}'
        )
        return ws

    def test_productivity_from_ledger_and_lines(self, tmp_path, capsys):
        ws = self._workspace(tmp_path)
        assert _run_main(["stats", "--workspace", str(ws)]) == 0
        out = dict(
            line.split("\t") for line in capsys.readouterr().out.strip().splitlines()
        )
        assert out["token_usage"] == "100"
        assert out["total_lines"] == "4"
        assert float(out["productivity"]) == pytest.approx(25.0)

    def test_missing_src_is_noinput(self, tmp_path):
        ws = tmp_path / "ws"
        ws.mkdir()
        (ws / "ledger.json").write_text('{"totals": {}}')
        (ws / "src").mkdir()
        assert _run_main(["stats", "--workspace", str(ws)]) == 66

    def test_out_of_range_executability(self, tmp_path):
        ws = self._workspace(tmp_path)
        code = _run_main(
            ["stats", "--workspace", str(ws), "--executability", "4.5", "--revisions", "1"]
        )
        assert code == 64

    def test_human_scores_recorded(self, tmp_path, capsys):
        ws = self._workspace(tmp_path)
        code = _run_main(
            ["stats", "--workspace", str(ws), "--executability", "3.75", "--revisions", "0.83"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "3.75" in out and "0.83" in out


class TestCmdReplay:
    def _log(self, tmp_path, lines):
        ws = tmp_path / "ws"
        (ws / "logs").mkdir(parents=True)
        (ws / "logs" / "messages.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""))
        return ws

    def _record(self, seq, kind="write_code"):
        return json.dumps(
            {
                "seq": seq,
                "sent_from": "Engineer",
                "cause_by": kind,
                "send_to": [],
                "timestamp": "2026-01-01T00:00:00+00:00",
                "content_kind": "text",
                "content": f"message {seq}",
            }
        )

    def test_three_message_log(self, tmp_path, capsys):
        ws = self._log(tmp_path, [self._record(i) for i in range(3)])
        assert _run_main(["replay", "--workspace", str(ws)]) == 0
        out = capsys.readouterr().out
        assert out.count("Engineer") == 3
        assert "3 messages" in out

    def test_gap_in_seqs(self, tmp_path, capsys):
        ws = self._log(tmp_path, [self._record(0), self._record(2)])
        assert _run_main(["replay", "--workspace", str(ws)]) == 65
        assert "line 2" in capsys.readouterr().err

    def test_empty_log(self, tmp_path, capsys):
        ws = self._log(tmp_path, [])
        assert _run_main(["replay", "--workspace", str(ws)]) == 0
        assert "0 messages" in capsys.readouterr().out
