"""Sandbox execution: status mapping, timeouts, isolation, output caps."""

import sys
import time
from concurrent.futures import ThreadPoolExecutor

import pytest

from sopforge.sandbox import (
    TRUNCATION_MARKER,
    ExecLimits,
    Sandbox,
    SandboxStatus,
)
from sopforge.types import CodeArtifact

from sample_docs import COUNTER_MODULE, COUNTER_TESTS_ONE_FAILING, COUNTER_TESTS_PASSING

PY = sys.executable


def art(name, code):
    return CodeArtifact(file_name=name, code=code)


class TestExecuteRaw:
    def test_ok_program(self, sandbox):
        result = sandbox.execute_raw([art("ok.py", "print('ok')\n")], [PY, "ok.py"])
        assert result.status is SandboxStatus.OK
        assert result.exit_code == 0
        assert result.stdout == "ok\n"

    def test_nonzero_exit(self, sandbox):
        result = sandbox.execute_raw(
            [art("fail.py", "import sys; sys.exit(3)\n")], [PY, "fail.py"]
        )
        assert result.status is SandboxStatus.NON_ZERO_EXIT
        assert result.exit_code == 3

    def test_infinite_loop_times_out_within_budget(self):
        sandbox = Sandbox(limits=ExecLimits(timeout=2.0))
        start = time.monotonic()
        result = sandbox.execute_raw(
            [art("spin.py", "while True:\n    pass\n")], [PY, "spin.py"]
        )
        wall = time.monotonic() - start
        assert result.status is SandboxStatus.TIMED_OUT
        assert result.duration >= 2.0
        assert wall < 3.0

    def test_nonexistent_interpreter(self, sandbox):
        result = sandbox.execute_raw(
            [art("x.py", "print(1)\n")], ["/no/such/interpreter-9999", "x.py"]
        )
        assert result.status is SandboxStatus.SPAWN_ERROR
        assert result.exit_code is None

    def test_empty_command_rejected(self, sandbox):
        with pytest.raises(ValueError):
            sandbox.execute_raw([art("x.py", "pass\n")], [])

    def test_output_truncated_and_marked(self):
        sandbox = Sandbox(limits=ExecLimits(timeout=20.0, max_output_bytes=64))
        result = sandbox.execute_raw(
            [art("noisy.py", "print('x' * 10000)\n")], [PY, "noisy.py"]
        )
        assert result.stdout.endswith(TRUNCATION_MARKER)
        assert len(result.stdout) <= 64 + len(TRUNCATION_MARKER)

    def test_environment_is_scrubbed(self, sandbox, monkeypatch):
        monkeypatch.setenv("SOPFORGE_API_KEY", "super-secret")
        code = "import os\nprint(sorted(k for k in os.environ if k == 'SOPFORGE_API_KEY'))\n"
        result = sandbox.execute_raw([art("env.py", code)], [PY, "env.py"])
        assert result.stdout.strip() == "[]"

    def test_run_directory_scrubbed_from_output(self, sandbox):
        code = "import os\nprint(os.getcwd())\n"
        result = sandbox.execute_raw([art("cwd.py", code)], [PY, "cwd.py"])
        assert result.stdout.strip() == "<rundir>"
        assert result.work_dir  # the raw path stays observable on the result

    def test_concurrent_runs_use_disjoint_directories(self, sandbox):
        code = "import os\nimport time\ntime.sleep(0.1)\nprint(os.getpid())\n"
        files = [art("pidself.py", code)]

        def one(_):
            return sandbox.execute_raw(files, [PY, "pidself.py"])

        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(one, range(4)))
        dirs = [r.work_dir for r in results]
        assert len(set(dirs)) == 4
        assert all(r.ok for r in results)

    def test_files_written_into_subdirectories(self, sandbox):
        files = [
            art("pkg/util.py", "VALUE = 41\n"),
            art("run.py", "import sys\nsys.path.insert(0, 'pkg')\nimport util\nprint(util.VALUE + 1)\n"),
        ]
        result = sandbox.execute_raw(files, [PY, "run.py"])
        assert result.stdout == "42\n"


class TestExecuteTests:
    def test_passing_module_and_tests(self, sandbox):
        result = sandbox.execute_tests(
            art("counter.py", COUNTER_MODULE), art("test_counter.py", COUNTER_TESTS_PASSING)
        )
        assert result.status is SandboxStatus.OK
        assert result.test_counts is None  # raw fallback infers from exit code only

    def test_failing_assertion(self, sandbox):
        result = sandbox.execute_tests(
            art("counter.py", COUNTER_MODULE), art("test_counter.py", COUNTER_TESTS_ONE_FAILING)
        )
        assert result.status is SandboxStatus.NON_ZERO_EXIT
        assert "AssertionError" in result.stderr

    def test_import_time_error_reports_traceback(self, sandbox):
        result = sandbox.execute_tests(
            art("counter.py", "def broken(:\n"),
            art("test_counter.py", COUNTER_TESTS_PASSING),
        )
        assert result.status is SandboxStatus.NON_ZERO_EXIT
        assert "Traceback" in result.stderr or "SyntaxError" in result.stderr

    def test_extra_files_materialized(self, sandbox):
        module = art("api.py", "from helper import answer\n\ndef get():\n    return answer()\n")
        tests = art(
            "test_api.py",
            "import unittest\nfrom api import get\n\n\nclass T(unittest.TestCase):\n"
            "    def test_get(self):\n        self.assertEqual(get(), 42)\n\n\n"
            "if __name__ == '__main__':\n    unittest.main()\n",
        )
        helper = art("helper.py", "def answer():\n    return 42\n")
        result = sandbox.execute_tests(module, tests, extra_files=[helper])
        assert result.ok
