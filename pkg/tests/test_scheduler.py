from __future__ import annotations

import pytest

from builders import snapshot, table
from lakecompact.candidates import apply_filters, rules_for
from lakecompact.errors import UnknownTable
from lakecompact.model import (
    MIB,
    CandidateScope,
    CompactionPlan,
    CompactionTask,
    EngineConfig,
    ScopeKind,
    TableId,
)
from lakecompact.scheduler import (
    HookKind,
    PeriodicTrigger,
    PostWriteTrigger,
    Scheduler,
    WriteNotification,
    build_schedule,
    in_blackout,
    periodic_tick,
)
from lakecompact.simulator.sim import pack

DAY = 86_400
T = 512 * MIB


def task(table_name: str, partition: str | None = None, db: str = "d") -> CompactionTask:
    kind = ScopeKind.PARTITION if partition else ScopeKind.TABLE
    scope = CandidateScope(kind, TableId(db, table_name), partition)
    cid = f"{db}.{table_name}" + (f"/{partition}" if partition else "")
    return CompactionTask(cid, scope, 1.0, 0.0)


def plan(*tasks):
    return CompactionPlan(0, tuple(tasks))


def wave_ids(schedule):
    return [[t.candidate_id for t in w] for w in schedule.waves]


def test_partitions_of_one_table_run_sequentially():
    s = build_schedule(plan(task("t", "1"), task("t", "2"), task("t", "3")), 8)
    assert wave_ids(s) == [["d.t/1"], ["d.t/2"], ["d.t/3"]]


def test_distinct_tables_run_in_parallel():
    s = build_schedule(plan(task("a"), task("b"), task("c")), 8)
    assert wave_ids(s) == [["d.a", "d.b", "d.c"]]


def test_wave_size_cap_preserves_priority():
    s = build_schedule(plan(*(task(n) for n in "abcde")), 2)
    assert wave_ids(s) == [["d.a", "d.b"], ["d.c", "d.d"], ["d.e"]]
    assert [t.candidate_id for t in s.tasks()] == ["d.a", "d.b", "d.c", "d.d", "d.e"]


def test_later_task_backfills_earlier_wave():
    s = build_schedule(plan(task("a", "1"), task("a", "2"), task("b")), 8)
    assert wave_ids(s) == [["d.a/1", "d.b"], ["d.a/2"]]


def test_unserialized_mode_allows_same_table():
    s = build_schedule(plan(task("t", "1"), task("t", "2")), 8, serialize_tables=False)
    assert wave_ids(s) == [["d.t/1", "d.t/2"]]


def test_schedule_to_dict_and_bad_parallelism():
    s = build_schedule(plan(task("a")), 1)
    assert s.to_dict() == {"waves": [["d.a"]]}
    with pytest.raises(ValueError):
        build_schedule(plan(), 0)


def test_periodic_tick_boundaries():
    assert periodic_tick(3600, 0, 3600)
    assert not periodic_tick(3599, 0, 3600)
    assert periodic_tick(5, None, 3600)


def test_blackout_windows_including_wraparound():
    windows = [(3600, 7200), (82_800, 3600)]
    assert in_blackout(3600, windows)
    assert not in_blackout(7200, windows)
    assert in_blackout(DAY - 1, windows) and in_blackout(DAY + 10, windows)
    assert not in_blackout(12 * 3600, windows)
    assert not periodic_tick(DAY + 3600, 0, 60, windows)


def test_scheduler_should_run_and_mark():
    s = Scheduler(EngineConfig(), PeriodicTrigger(600), last_run=0)
    assert not s.should_run(599) and s.should_run(600)
    s.mark_run(600)
    assert not s.should_run(1000)
    assert not Scheduler(EngineConfig(), PostWriteTrigger()).should_run(10**6)


def fragmented(n_small: int, last_write_at: int = DAY):
    return snapshot(table("d", "t", flat=[MIB] * n_small + [T] * 5, last_write_at=last_write_at))


def test_hook_triggers_compaction_above_threshold():
    s = Scheduler(EngineConfig(), PostWriteTrigger(60, {"file_count_reduction": 10}))
    action = s.post_write_hook(WriteNotification(TableId("d", "t"), 2 * DAY), fragmented(20))
    assert action.kind is HookKind.TRIGGER_COMPACTION
    assert [c.candidate_id for c in action.candidates] == ["d.t"]


def test_hook_debounced():
    s = Scheduler(EngineConfig(), PostWriteTrigger(60, {"file_count_reduction": 10}))
    tid = TableId("d", "t")
    s.post_write_hook(WriteNotification(tid, 2 * DAY), fragmented(20))
    action = s.post_write_hook(WriteNotification(tid, 2 * DAY + 1), fragmented(20))
    assert action.kind is HookKind.NONE
    later = s.post_write_hook(WriteNotification(tid, 2 * DAY + 60), fragmented(20))
    assert later.kind is HookKind.TRIGGER_COMPACTION


def test_hook_below_threshold_marks_dirty():
    s = Scheduler(EngineConfig(), PostWriteTrigger(60, {"file_count_reduction": 10}))
    tid = TableId("d", "t")
    action = s.post_write_hook(WriteNotification(tid, 2 * DAY), fragmented(3))
    assert action.kind is HookKind.RECOMPUTE_TRAITS
    assert tid in s.dirty
    assert s.cache.get("d.t").small_file_count == 3


def test_hook_unknown_table():
    s = Scheduler(EngineConfig(), PostWriteTrigger())
    with pytest.raises(UnknownTable):
        s.post_write_hook(WriteNotification(TableId("d", "x"), 0), fragmented(3))


def test_feedback_refreshes_on_success_only():
    cfg = EngineConfig()
    s = Scheduler(cfg, PeriodicTrigger(3600))
    before = fragmented(20).table(TableId("d", "t"))
    s.cache.refresh_table(before, cfg)
    t = task("t")

    assert s.feedback(t, False, before) == []
    assert s.cache.get("d.t").small_file_count == 20

    compacted = table("d", "t", flat=list(pack(20 * MIB, T)) + [T] * 5, last_write_at=DAY)
    (fresh,) = s.feedback(t, True, compacted)
    assert fresh.stats.small_file_count < 20
    assert s.cache.get("d.t").small_file_count == 1

    kept, dropped = apply_filters([fresh], rules_for(cfg), cfg, 2 * DAY)
    assert kept == [] and dropped[0].rule == "nothing_to_do"
