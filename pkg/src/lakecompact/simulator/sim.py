"""Closed-loop discrete-event simulation of a lake under write load and compaction.

Events are ordered by (time, priority, sequence). At equal timestamps task
completions run first, then trigger checks, then writes, then the metrics
snapshot, so a metrics row at ``t`` covers every event in ``(t - interval, t]``.

Conflict model:

* a write attempting to commit to a table with a compaction in flight is a
  client-side conflict (with ``client_conflict_prob``) and retries once after
  the backoff; the retry always commits;
* a committed write aborts every in-flight compaction whose scope covers the
  written partition (a cluster-side conflict; the table is left unchanged);
* with table serialization disabled, a compaction also aborts if another
  compaction committed on the same table while it ran.
"""

from __future__ import annotations

import heapq
import json
import math
import random
import time
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace

from lakecompact.candidates import FilterRule
from lakecompact.engine import run_pipeline
from lakecompact.errors import ConfigError
from lakecompact.model import (
    DEFAULT_PARTITION,
    CompactionPlan,
    CompactionTask,
    DatabaseState,
    FileRecord,
    ScopeKind,
    SnapshotDocument,
    TableId,
    TableState,
)
from lakecompact.scheduler import (
    DispatchSchedule,
    HookKind,
    PostWriteTrigger,
    Scheduler,
    WriteNotification,
    build_schedule,
)
from lakecompact.simulator.config import CompactionSettings, SimConfig, TableTopology
from lakecompact.simulator.workload import WriteSpec, generate_writes, initial_files
from lakecompact.traits import compute_cost_gbhr

CSV_HEADER = (
    "t,total_files,small_files,files_added,files_removed,"
    "compaction_gbhr,client_conflicts,cluster_conflicts,tables_compacted"
)

_TASK_END, _TRIGGER, _WRITE, _METRICS = range(4)


@dataclass(frozen=True)
class MetricsRow:
    t: int
    total_files: int
    small_files: int
    files_added: int
    files_removed: int
    compaction_gbhr: float
    client_conflicts: int
    cluster_conflicts: int
    tables_compacted: int

    def csv_line(self) -> str:
        return (
            f"{self.t},{self.total_files},{self.small_files},{self.files_added},"
            f"{self.files_removed},{self.compaction_gbhr:.6f},{self.client_conflicts},"
            f"{self.cluster_conflicts},{self.tables_compacted}"
        )


@dataclass(frozen=True)
class RewriteUnit:
    """One partition's worth of rewritten files."""

    partition_key: str
    input_files: int
    input_bytes: int
    output_sizes: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "partition_key": self.partition_key,
            "input_files": self.input_files,
            "input_bytes": self.input_bytes,
            "output_sizes": list(self.output_sizes),
        }


@dataclass(frozen=True)
class CompactionRecord:
    candidate_id: str
    round: int
    start: int
    end: int
    succeeded: bool
    gbhr: float
    units: tuple[RewriteUnit, ...]
    abort_reason: str | None = None


@dataclass(frozen=True)
class SimResult:
    name: str
    rows: tuple[MetricsRow, ...]
    final: SnapshotDocument
    events: tuple[dict, ...]
    compactions: tuple[CompactionRecord, ...]
    initial_files: int

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER, *(r.csv_line() for r in self.rows)]) + "\n"

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.events)

    def summary(self) -> dict:
        last = self.rows[-1]
        return {
            "strategy": self.name,
            "final_files": last.total_files,
            "final_small_files": last.small_files,
            "total_gbhr": math.fsum(r.compaction_gbhr for r in self.rows),
            "client_conflicts": sum(r.client_conflicts for r in self.rows),
            "cluster_conflicts": sum(r.cluster_conflicts for r in self.rows),
        }


def pack(total_bytes: int, target: int) -> tuple[int, ...]:
    """Output sizes for rewriting ``total_bytes``: full target files plus one remainder."""
    if total_bytes <= 0:
        return ()
    n = -(-total_bytes // target)
    return (target,) * (n - 1) + (total_bytes - (n - 1) * target,)


class _Table:
    def __init__(self, table_id: TableId, topology: TableTopology, created_at: int, last_write_at: int):
        self.table_id = table_id
        self.topology = topology
        self.created_at = created_at
        self.last_write_at = last_write_at
        self.partitions: dict[str, dict[str, FileRecord]] = {}
        self.next_file = 0
        self.last_compaction_commit = -1

    def new_file_id(self, prefix: str) -> str:
        self.next_file += 1
        return f"{prefix}-{self.next_file:08d}"

    def state(self) -> TableState:
        parts = {k: tuple(v.values()) for k, v in self.partitions.items()}
        if not self.topology.is_partitioned and not parts:
            parts = {DEFAULT_PARTITION: ()}
        return TableState(self.table_id, self.created_at, self.topology.is_partitioned, parts, self.last_write_at)


@dataclass(eq=False)
class _Round:
    number: int
    waves: deque
    pending: int = 0


@dataclass(eq=False)
class _Running:
    task: CompactionTask
    table: _Table
    round: _Round
    start: int
    end: int
    units: list[tuple[str, list[FileRecord]]]
    rewritten_bytes: int
    gbhr: float
    abort_reason: str | None = None


@dataclass
class _Interval:
    added: int = 0
    removed: int = 0
    gbhr: list[float] = field(default_factory=list)
    client: int = 0
    cluster: int = 0
    tables: set = field(default_factory=set)


class _Simulation:
    def __init__(self, config: SimConfig, writes: Sequence[WriteSpec]):
        self.cfg = config
        self.settings: CompactionSettings | None = config.compaction
        self.queue: list = []
        self.seq = 0
        self.events: list[dict] = []
        self.records: list[CompactionRecord] = []
        self.rows: list[MetricsRow] = []
        self.interval = _Interval()
        self.total_files = 0
        self.small_files = 0
        self.rounds = 0
        self.conflict_rng = random.Random(f"{config.seed}/conflicts")
        self.running: dict[TableId, list[_Running]] = {}
        self.busy: dict[TableId, int] = {}
        self.tables: dict[TableId, _Table] = {}
        self._load_initial()
        self.initial_files = self.total_files

        engine = self.settings.engine if self.settings else None
        ex = config.execution
        self.target = ex.target_file_size_bytes or (engine.target_file_size_bytes if engine else config.small_file_bytes)
        self.throughput = ex.rewrite_bytes_per_hour or (engine.rewrite_bytes_per_hour if engine else 1.0)
        self.memory_gb = ex.executor_memory_gb or (engine.executor_memory_gb if engine else 0.0)
        self.scheduler = (
            Scheduler(self.settings.engine, self.settings.trigger, last_run=self.epoch(0))
            if self.settings
            else None
        )

        for w in writes:
            self.push(w.t, _WRITE, (w, False))
        step = config.metrics_interval_seconds
        for t in range(0, config.duration_seconds + 1, step):
            self.push(t, _METRICS, None)
            if self.settings and not isinstance(self.settings.trigger, PostWriteTrigger) and 0 < t < config.duration_seconds:
                self.push(t, _TRIGGER, None)

    # -- helpers -----------------------------------------------------------

    def epoch(self, t: int) -> int:
        return self.cfg.start_epoch + t

    def push(self, t: int, prio: int, payload) -> None:
        self.seq += 1
        heapq.heappush(self.queue, (t, prio, self.seq, payload))

    def log(self, t: int, kind: str, **detail) -> None:
        self.events.append({"t": t, "kind": kind, "detail": detail})

    def partition_key(self, table: TableTopology, epoch: int) -> str:
        if not table.is_partitioned:
            return DEFAULT_PARTITION
        g = table.partition_granularity_seconds
        return time.strftime("%Y%m%dT%H%M%S", time.gmtime(epoch // g * g))

    def _add_file(self, table: _Table, key: str, size: int, created_at: int, prefix: str) -> None:
        fid = table.new_file_id(prefix)
        pk = None if key == DEFAULT_PARTITION else key
        table.partitions.setdefault(key, {})[fid] = FileRecord(fid, size, created_at, pk)
        self.total_files += 1
        if size < self.cfg.small_file_bytes:
            self.small_files += 1

    def _remove_file(self, table: _Table, key: str, f: FileRecord) -> None:
        del table.partitions[key][f.file_id]
        self.total_files -= 1
        if f.size_bytes < self.cfg.small_file_bytes:
            self.small_files -= 1

    def _load_initial(self) -> None:
        cfg = self.cfg
        created = cfg.start_epoch - cfg.table_age_seconds
        for db in cfg.database_ids():
            for topo in cfg.tables:
                table = _Table(TableId(db, topo.name), topo, created, cfg.start_epoch - 1)
                self.tables[table.table_id] = table
                g = topo.partition_granularity_seconds
                for bucket, sizes in initial_files(cfg, db, topo).items():
                    if bucket is None:
                        key, born = DEFAULT_PARTITION, created
                    else:
                        born = (cfg.start_epoch // g + bucket) * g
                        key = self.partition_key(topo, born)
                    table.partitions.setdefault(key, {})
                    for size in sizes:
                        self._add_file(table, key, size, born, "init")

    def snapshot(self, t: int) -> SnapshotDocument:
        by_db: dict[str, list[TableState]] = {}
        counts: dict[str, int] = {}
        for tid, table in self.tables.items():
            st = table.state()
            by_db.setdefault(tid.database, []).append(st)
            counts[tid.database] = counts.get(tid.database, 0) + st.file_count
        dbs = tuple(
            DatabaseState(db, tuple(states), min(counts[db], self.cfg.total_quota), self.cfg.total_quota)
            for db, states in by_db.items()
        )
        return SnapshotDocument(1, self.epoch(t), dbs)

    # -- event handlers ----------------------------------------------------

    def run(self) -> None:
        while self.queue:
            t, prio, _, payload = heapq.heappop(self.queue)
            if t > self.cfg.duration_seconds:
                break
            if prio == _TASK_END:
                self.finish_task(t, payload)
            elif prio == _TRIGGER:
                self.trigger(t)
            elif prio == _WRITE:
                self.write(t, *payload)
            else:
                self.metrics(t)

    def write(self, t: int, spec: WriteSpec, is_retry: bool) -> None:
        table = self.tables[TableId(spec.database, spec.table)]
        holders = self.running.get(table.table_id)
        conflict_p = self.cfg.conflicts.client_conflict_prob
        if holders and not is_retry and (conflict_p >= 1.0 or self.conflict_rng.random() < conflict_p):
            self.interval.client += 1
            self.log(t, "client_conflict", table=str(table.table_id), files=len(spec.sizes))
            self.push(t + self.cfg.conflicts.retry_backoff_seconds, _WRITE, (spec, True))
            return

        epoch = self.epoch(t)
        key = self.partition_key(table.topology, epoch)
        for size in spec.sizes:
            self._add_file(table, key, size, epoch, "w")
        table.last_write_at = epoch
        self.interval.added += len(spec.sizes)
        self.log(t, "write", table=str(table.table_id), partition=key, files=len(spec.sizes), retry=is_retry)

        if self.cfg.conflicts.cluster_abort_on_overlap:
            for run in holders or ():
                scope = run.task.scope
                if run.abort_reason is None and (scope.kind is ScopeKind.TABLE or scope.partition_key == key):
                    run.abort_reason = "write_overlap"
                    self.interval.cluster += 1
                    self.log(t, "cluster_conflict", candidate=run.task.candidate_id, partition=key)

        if self.scheduler and isinstance(self.settings.trigger, PostWriteTrigger):
            self.post_write(t, table)

    def post_write(self, t: int, table: _Table) -> None:
        state = table.state()
        view = _SingleTable(state)
        action = self.scheduler.post_write_hook(WriteNotification(table.table_id, self.epoch(t)), view)
        if action.kind is not HookKind.TRIGGER_COMPACTION or self.busy.get(table.table_id):
            return
        engine = self.settings.engine
        tasks = tuple(
            CompactionTask(
                c.candidate_id,
                c.scope,
                compute_cost_gbhr(c, engine.executor_memory_gb, engine.rewrite_bytes_per_hour),
                0.0,
            )
            for c in action.candidates
        )
        plan = CompactionPlan(self.epoch(t), tasks, (), math.fsum(x.estimated_gbhr for x in tasks))
        self.log(t, "hook_trigger", table=str(table.table_id), tasks=len(tasks))
        self.submit(build_schedule(plan, self.settings.max_parallel, serialize_tables=self.settings.serialize_tables), t)

    def trigger(self, t: int) -> None:
        epoch = self.epoch(t)
        if not self.scheduler.should_run(epoch):
            return
        busy = self.busy

        def _busy(c, cfg, now):
            return "table has queued or running compactions" if busy.get(c.table_id) else None

        result = run_pipeline(
            self.snapshot(t), self.settings.engine, epoch, extra_rules=(FilterRule("busy_table", _busy),)
        )
        self.scheduler.mark_run(epoch)
        schedule = build_schedule(
            result.plan, self.settings.max_parallel, serialize_tables=self.settings.serialize_tables
        )
        self.log(
            t,
            "trigger",
            candidates=len(result.candidates),
            kept=len(result.kept),
            tasks=len(result.plan.tasks),
            waves=len(schedule.waves),
            estimated_gbhr=result.plan.total_estimated_gbhr,
        )
        self.submit(schedule, t)

    def submit(self, schedule: DispatchSchedule, now: int) -> None:
        if not schedule.waves:
            return
        self.rounds += 1
        rnd = _Round(self.rounds, deque(schedule.waves))
        for task in schedule.tasks():
            tid = task.scope.table_id
            self.busy[tid] = self.busy.get(tid, 0) + 1
        self.start_next_wave(rnd, now)

    def start_next_wave(self, rnd: _Round, t: int) -> None:
        if rnd.waves:
            wave = rnd.waves.popleft()
            rnd.pending = len(wave)
            for task in wave:
                self.start_task(rnd, task, t)

    def start_task(self, rnd: _Round, task: CompactionTask, t: int) -> None:
        table = self.tables[task.scope.table_id]
        if task.scope.kind is ScopeKind.TABLE:
            keys = sorted(table.partitions)
        else:
            keys = [task.scope.partition_key] if task.scope.partition_key in table.partitions else []
        units = []
        rewritten = 0
        for key in keys:
            small = [f for f in table.partitions[key].values() if f.size_bytes < self.target]
            # A single small file would be rewritten into itself.
            if len(small) >= 2:
                units.append((key, small))
                rewritten += sum(f.size_bytes for f in small)
        duration = max(1, math.ceil(rewritten * 3600 / self.throughput))
        run = _Running(task, table, rnd, t, t + duration, units, rewritten, self.memory_gb * rewritten / self.throughput)
        self.running.setdefault(table.table_id, []).append(run)
        self.log(t, "task_start", candidate=task.candidate_id, round=rnd.number, end=run.end, bytes=rewritten)
        self.push(run.end, _TASK_END, run)

    def finish_task(self, t: int, run: _Running) -> None:
        table = run.table
        tid = table.table_id
        self.running[tid].remove(run)
        if not self.running[tid]:
            del self.running[tid]
        self.busy[tid] -= 1
        if not self.busy[tid]:
            del self.busy[tid]

        if (
            run.abort_reason is None
            and self.settings is not None
            and not self.settings.serialize_tables
            and table.last_compaction_commit > run.start
        ):
            run.abort_reason = "concurrent_compaction"
            self.interval.cluster += 1
            self.log(t, "cluster_conflict", candidate=run.task.candidate_id, partition=None)

        self.interval.gbhr.append(run.gbhr)
        units: list[RewriteUnit] = []
        ok = run.abort_reason is None
        if ok:
            for key, files in run.units:
                total = sum(f.size_bytes for f in files)
                outputs = pack(total, self.target)
                for f in files:
                    self._remove_file(table, key, f)
                for size in outputs:
                    self._add_file(table, key, size, self.epoch(t), "c")
                units.append(RewriteUnit(key, len(files), total, outputs))
                self.interval.removed += len(files) - len(outputs)
            if units:
                table.last_compaction_commit = t
                self.interval.tables.add(tid)
        self.records.append(
            CompactionRecord(run.task.candidate_id, run.round.number, run.start, t, ok, run.gbhr, tuple(units), run.abort_reason)
        )
        self.log(t, "task_end", candidate=run.task.candidate_id, succeeded=ok, reason=run.abort_reason, units=[u.to_dict() for u in units])
        if self.scheduler and isinstance(self.settings.trigger, PostWriteTrigger):
            self.scheduler.feedback(run.task, ok, table.state())

        run.round.pending -= 1
        if run.round.pending == 0:
            self.start_next_wave(run.round, t)

    def metrics(self, t: int) -> None:
        iv = self.interval
        self.rows.append(
            MetricsRow(
                t,
                self.total_files,
                self.small_files,
                iv.added,
                iv.removed,
                math.fsum(iv.gbhr),
                iv.client,
                iv.cluster,
                len(iv.tables),
            )
        )
        self.interval = _Interval()


class _SingleTable:
    """Minimal state view for the post-write hook."""

    def __init__(self, table: TableState):
        self._table = table

    def table(self, table_id: TableId) -> TableState | None:
        return self._table if table_id == self._table.table_id else None


def simulate(config: SimConfig, *, name: str | None = None, writes: Sequence[WriteSpec] | None = None) -> SimResult:
    sim = _Simulation(config, writes if writes is not None else generate_writes(config))
    sim.run()
    label = name or (config.compaction.name if config.compaction else "none")
    return SimResult(label, tuple(sim.rows), sim.snapshot(config.duration_seconds), tuple(sim.events), tuple(sim.records), sim.initial_files)


def run(config: SimConfig) -> tuple[list[MetricsRow], SnapshotDocument, list[dict]]:
    res = simulate(config)
    return list(res.rows), res.final, list(res.events)


def compare_strategies(base: SimConfig, strategies: Iterable[CompactionSettings | None]) -> dict[str, SimResult]:
    """Run each strategy on the same workload. ``None`` is the no-compaction baseline."""
    base = replace(base, compaction=None)
    writes = generate_writes(base)
    out: dict[str, SimResult] = {}
    for settings in strategies:
        name = settings.name if settings else "none"
        if name in out:
            raise ConfigError(f"duplicate strategy name {name!r}")
        out[name] = simulate(replace(base, compaction=settings), name=name, writes=writes)
    return out


def first_round_reduction(result: SimResult, trigger_t: int, window: int) -> float:
    """Files removed in ``(trigger_t, trigger_t + window]`` relative to the count at ``trigger_t``."""
    at = next(r for r in result.rows if r.t == trigger_t)
    removed = sum(r.files_removed for r in result.rows if trigger_t < r.t <= trigger_t + window)
    return removed / at.total_files
