"""Message pool semantics: publish, filtered fetch, gating, linearizability."""

import json
import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sopforge.errors import CorruptLog, EmptyContent, UnknownSubscription
from sopforge.pool import MessagePool, read_message_log
from sopforge.types import ActionKind, CodeArtifact, RoleProfile, TestReport


def _role(name, *kinds):
    return RoleProfile(name=name, profile=name, watched_actions=frozenset(kinds))


ARCHITECT = _role("Architect", ActionKind.USER_REQUIREMENT, ActionKind.WRITE_PRD)
ENGINEER = _role("Engineer", ActionKind.WRITE_TASKS)


class TestPublish:
    def test_first_publish_gets_seq_zero(self):
        pool = MessagePool()
        seq = pool.publish(sent_from="user", cause_by=ActionKind.USER_REQUIREMENT, content="idea")
        assert seq == 0

    def test_empty_content_rejected(self):
        pool = MessagePool()
        with pytest.raises(EmptyContent):
            pool.publish(sent_from="user", cause_by=ActionKind.USER_REQUIREMENT, content="   ")

    def test_concurrent_publishes_get_distinct_seqs(self):
        pool = MessagePool()
        seqs = []
        lock = threading.Lock()

        def worker():
            seq = pool.publish(
                sent_from="worker", cause_by=ActionKind.WRITE_CODE, content="x = 1"
            )
            with lock:
                seqs.append(seq)

        threads = [threading.Thread(target=worker) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(seqs) == [0, 1]
        assert len(pool.snapshot()) == 2


class TestFetchNew:
    def test_architect_receives_prd_once(self):
        pool = MessagePool()
        pool.register(ARCHITECT)
        pool.publish(sent_from="Product Manager", cause_by=ActionKind.WRITE_PRD, content="the prd")
        first = pool.fetch_new("Architect")
        assert [m.cause_by for m in first] == [ActionKind.WRITE_PRD]
        assert pool.fetch_new("Architect") == []

    def test_uninteresting_kinds_are_ignored(self):
        pool = MessagePool()
        pool.register(ARCHITECT)
        pool.publish(sent_from="QA Engineer", cause_by=ActionKind.WRITE_TESTS, content="tests")
        assert pool.fetch_new("Architect") == []

    def test_directed_message_overrides_interest_filter(self):
        pool = MessagePool()
        pool.register(ENGINEER)
        pool.publish(
            sent_from="Engineer",
            cause_by=ActionKind.DEBUG_CODE,
            content="try again",
            send_to={"Engineer"},
        )
        fetched = pool.fetch_new("Engineer")
        assert len(fetched) == 1
        assert fetched[0].send_to == frozenset({"Engineer"})

    def test_unknown_subscription(self):
        pool = MessagePool()
        with pytest.raises(UnknownSubscription):
            pool.fetch_new("Ghost")

    def test_cursor_never_decreases(self):
        pool = MessagePool()
        sub = pool.register(ARCHITECT)
        cursors = [sub.cursor]
        for i in range(5):
            pool.publish(sent_from="x", cause_by=ActionKind.WRITE_PRD, content=f"doc {i}")
            pool.fetch_new("Architect")
            cursors.append(sub.cursor)
        assert cursors == sorted(cursors)


class TestReady:
    def test_false_until_all_prerequisites_present(self):
        pool = MessagePool()
        prereqs = {ActionKind.USER_REQUIREMENT, ActionKind.WRITE_PRD}
        pool.publish(sent_from="user", cause_by=ActionKind.USER_REQUIREMENT, content="idea")
        assert not pool.ready(prereqs)
        pool.publish(sent_from="Product Manager", cause_by=ActionKind.WRITE_PRD, content="prd")
        assert pool.ready(prereqs)

    def test_empty_prerequisites_vacuously_ready(self):
        assert MessagePool().ready(set())

    @settings(max_examples=60)
    @given(
        st.lists(st.sampled_from(list(ActionKind)), max_size=16),
        st.sets(st.sampled_from(list(ActionKind)), max_size=4),
    )
    def test_ready_is_monotone_in_pool_growth(self, kinds, prereqs):
        pool = MessagePool()
        history = [pool.ready(prereqs)]
        for kind in kinds:
            pool.publish(sent_from="r", cause_by=kind, content="payload")
            history.append(pool.ready(prereqs))
        # once true, never false again
        assert history == sorted(history)


class TestSnapshot:
    def test_fresh_pool_is_empty(self):
        assert MessagePool().snapshot() == []

    def test_three_publishes_seqs_in_order(self):
        pool = MessagePool()
        for i in range(3):
            pool.publish(sent_from="r", cause_by=ActionKind.WRITE_CODE, content=f"c{i}")
        assert [m.seq for m in pool.snapshot()] == [0, 1, 2]

    def test_snapshot_unaffected_by_fetches(self):
        pool = MessagePool()
        pool.register(ARCHITECT)
        pool.publish(sent_from="user", cause_by=ActionKind.USER_REQUIREMENT, content="idea")
        before = pool.snapshot()
        pool.fetch_new("Architect")
        pool.publish(sent_from="pm", cause_by=ActionKind.WRITE_PRD, content="prd")
        pool.fetch_new("Architect")
        after = pool.snapshot()
        assert after[: len(before)] == before
        assert len(after) == 2


class TestDeliveryCompleteness:
    def test_interleaved_fetches_deliver_projection_without_gaps(self):
        rng = random.Random(7)
        pool = MessagePool()
        pool.register(ARCHITECT)
        delivered = []
        published = []
        kinds = list(ActionKind)
        for i in range(200):
            if rng.random() < 0.7:
                kind = rng.choice(kinds)
                pool.publish(sent_from="r", cause_by=kind, content=f"m{i}")
                published.append(kind)
            else:
                delivered.extend(pool.fetch_new("Architect"))
        delivered.extend(pool.fetch_new("Architect"))
        expected = [
            m for m in pool.snapshot() if m.cause_by in ARCHITECT.watched_actions
        ]
        assert [m.seq for m in delivered] == [m.seq for m in expected]
        assert len({m.seq for m in delivered}) == len(delivered)

    def test_append_only_log(self):
        pool = MessagePool()
        pool.publish(sent_from="r", cause_by=ActionKind.WRITE_PRD, content="v1")
        first = pool.snapshot()[0]
        pool.publish(sent_from="r", cause_by=ActionKind.WRITE_PRD, content="v2")
        assert pool.snapshot()[0] is first


class TestConcurrentLinearizability:
    def test_eight_publishers_hundred_messages_each(self):
        pool = MessagePool()
        pool.register(ENGINEER)
        n_publishers, per_publisher = 8, 100
        fetched = []
        stop = threading.Event()

        def publisher(pid):
            for i in range(per_publisher):
                pool.publish(
                    sent_from=f"p{pid}", cause_by=ActionKind.WRITE_TASKS, content=f"{pid}:{i}"
                )

        def consumer():
            while not stop.is_set():
                fetched.extend(pool.fetch_new("Engineer"))
            fetched.extend(pool.fetch_new("Engineer"))

        threads = [threading.Thread(target=publisher, args=(pid,)) for pid in range(n_publishers)]
        fetcher = threading.Thread(target=consumer)
        fetcher.start()
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        stop.set()
        fetcher.join()

        total = n_publishers * per_publisher
        snapshot = pool.snapshot()
        assert len(snapshot) == total
        assert [m.seq for m in snapshot] == list(range(total))
        seqs = [m.seq for m in fetched]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs) == total


class TestPersistence:
    def test_jsonl_round_trip(self, tmp_path):
        pool = MessagePool()
        pool.publish(sent_from="user", cause_by=ActionKind.USER_REQUIREMENT, content="idea")
        pool.publish(
            sent_from="Engineer",
            cause_by=ActionKind.WRITE_CODE,
            content=CodeArtifact(file_name="main.py", code="print('hi')\n"),
        )
        pool.publish(
            sent_from="Engineer",
            cause_by=ActionKind.RUN_TESTS,
            content=TestReport(module_file="main.py", tests_file="test_main.py", status="passed"),
        )
        path = tmp_path / "logs" / "messages.jsonl"
        pool.save_jsonl(path)
        loaded = MessagePool.load_jsonl(path)
        original = pool.snapshot()
        for before, after in zip(original, loaded.snapshot()):
            assert before.seq == after.seq
            assert before.cause_by is after.cause_by
            assert before.content == after.content

    def test_log_fields(self, tmp_path):
        pool = MessagePool()
        pool.publish(sent_from="user", cause_by=ActionKind.USER_REQUIREMENT, content="idea")
        path = tmp_path / "messages.jsonl"
        pool.save_jsonl(path)
        record = json.loads(path.read_text().splitlines()[0])
        assert set(record) == {
            "seq",
            "sent_from",
            "cause_by",
            "send_to",
            "timestamp",
            "content_kind",
            "content",
        }
        assert record["cause_by"] == "user_requirement"

    def test_seq_gap_detected(self, tmp_path):
        pool = MessagePool()
        for i in range(3):
            pool.publish(sent_from="r", cause_by=ActionKind.WRITE_PRD, content=f"m{i}")
        path = tmp_path / "messages.jsonl"
        pool.save_jsonl(path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join([lines[0], lines[2]]) + "\n")
        with pytest.raises(CorruptLog) as exc:
            read_message_log(path)
        assert exc.value.line_no == 2

    def test_bad_json_detected(self, tmp_path):
        path = tmp_path / "messages.jsonl"
        path.write_text('{"seq": 0, "content_kind": "text"}\nnot json\n')
        with pytest.raises(CorruptLog) as exc:
            read_message_log(path)
        assert exc.value.line_no == 2
