"""Act phase: dispatch waves, trigger modes and the observation feedback loop.

Execution itself is delegated to an :class:`Executor`; the simulator provides
one and a real deployment would bind a job runner.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Union

from lakecompact.candidates import apply_filters, rules_for, table_candidates
from lakecompact.errors import ConfigError, UnknownTable
from lakecompact.model import (
    Candidate,
    CandidateStats,
    CompactionPlan,
    CompactionTask,
    EngineConfig,
    SnapshotDocument,
    TableId,
    TableState,
)
from lakecompact.traits import TraitRegistry, compute_traits, default_registry

DEFAULT_DEBOUNCE_SECONDS = 300
SECONDS_PER_DAY = 86_400


@dataclass(frozen=True)
class PeriodicTrigger:
    interval_seconds: int
    # (start, end) seconds-of-day, half-open; start > end wraps past midnight.
    blackout_windows: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.interval_seconds <= 0:
            raise ConfigError("trigger.interval_seconds must be > 0")
        for start, end in self.blackout_windows:
            if not (0 <= start < SECONDS_PER_DAY and 0 <= end <= SECONDS_PER_DAY):
                raise ConfigError("trigger.blackout_windows entries must be seconds-of-day")


@dataclass(frozen=True)
class PostWriteTrigger:
    debounce_seconds: int = DEFAULT_DEBOUNCE_SECONDS
    thresholds: Mapping[str, float] = field(default_factory=lambda: {"small_file_fraction": 0.10})

    def __post_init__(self) -> None:
        if self.debounce_seconds <= 0:
            raise ConfigError("trigger.debounce_seconds must be > 0")
        if not self.thresholds:
            raise ConfigError("trigger.thresholds must be non-empty")


TriggerMode = Union[PeriodicTrigger, PostWriteTrigger]


@dataclass(frozen=True)
class DispatchSchedule:
    waves: tuple[tuple[CompactionTask, ...], ...]

    def tasks(self) -> list[CompactionTask]:
        return [t for wave in self.waves for t in wave]

    def to_dict(self) -> dict:
        return {"waves": [[t.candidate_id for t in wave] for wave in self.waves]}


def build_schedule(
    plan: CompactionPlan, max_parallel: int, *, serialize_tables: bool = True
) -> DispatchSchedule:
    """Assign tasks, in plan order, to the earliest wave with room and no task on
    the same table. ``serialize_tables=False`` drops the same-table rule and is
    only meant for ablation runs."""
    if max_parallel <= 0:
        raise ValueError("max_parallel must be > 0")
    waves: list[list[CompactionTask]] = []
    tables: list[set[TableId]] = []
    for task in plan.tasks:
        tid = task.scope.table_id
        for wave, seen in zip(waves, tables):
            if len(wave) < max_parallel and (not serialize_tables or tid not in seen):
                wave.append(task)
                seen.add(tid)
                break
        else:
            waves.append([task])
            tables.append({tid})
    return DispatchSchedule(tuple(tuple(w) for w in waves))


def in_blackout(now: int, windows: Iterable[tuple[int, int]]) -> bool:
    sod = now % SECONDS_PER_DAY
    for start, end in windows:
        if start <= end:
            if start <= sod < end:
                return True
        elif sod >= start or sod < end:
            return True
    return False


def periodic_tick(
    now: int,
    last_run: int | None,
    interval: int,
    blackout_windows: Iterable[tuple[int, int]] = (),
) -> bool:
    if interval <= 0:
        raise ValueError("interval must be > 0")
    if in_blackout(now, blackout_windows):
        return False
    return last_run is None or now - last_run >= interval


class Executor(Protocol):
    def submit(self, schedule: DispatchSchedule, now: int) -> None: ...


@dataclass(frozen=True)
class WriteNotification:
    table_id: TableId
    now: int


class HookKind(str, Enum):
    NONE = "none"
    RECOMPUTE_TRAITS = "recompute_traits"
    TRIGGER_COMPACTION = "trigger_compaction"


@dataclass(frozen=True)
class HookAction:
    kind: HookKind
    candidates: tuple[Candidate, ...] = ()


HOOK_NONE = HookAction(HookKind.NONE)


class ObservationCache:
    """Cached per-candidate statistics, refreshed from act-phase feedback."""

    def __init__(self) -> None:
        self._stats: dict[str, CandidateStats] = {}
        self._by_table: dict[TableId, set[str]] = {}

    def get(self, candidate_id: str) -> CandidateStats | None:
        return self._stats.get(candidate_id)

    def __contains__(self, candidate_id: object) -> bool:
        return candidate_id in self._stats

    def observe(self, candidates: Iterable[Candidate]) -> None:
        for c in candidates:
            self._stats[c.candidate_id] = c.stats
            self._by_table.setdefault(c.table_id, set()).add(c.candidate_id)

    def invalidate(self, table_id: TableId) -> None:
        for cid in self._by_table.pop(table_id, set()):
            self._stats.pop(cid, None)

    def refresh_table(self, table: TableState, config: EngineConfig) -> list[Candidate]:
        self.invalidate(table.table_id)
        cands = table_candidates(table, config.scope_strategy, config.target_file_size_bytes)
        self.observe(cands)
        return cands


class Scheduler:
    """Trigger state for one engine instance.

    Operations mutate ``last_run``, debounce timestamps and dirty flags and
    must not be interleaved by callers.
    """

    def __init__(
        self,
        config: EngineConfig,
        trigger: TriggerMode,
        *,
        registry: TraitRegistry | None = None,
        last_run: int | None = None,
    ):
        self.config = config
        self.trigger = trigger
        self.registry = registry if registry is not None else default_registry()
        self.last_run = last_run
        self.last_hook_fire: dict[TableId, int] = {}
        self.dirty: set[TableId] = set()
        self.cache = ObservationCache()

    def should_run(self, now: int) -> bool:
        if not isinstance(self.trigger, PeriodicTrigger):
            return False
        return periodic_tick(now, self.last_run, self.trigger.interval_seconds, self.trigger.blackout_windows)

    def mark_run(self, now: int) -> None:
        self.last_run = now
        self.dirty.clear()

    def post_write_hook(
        self,
        event: WriteNotification,
        state: SnapshotDocument,
        thresholds: Mapping[str, float] | None = None,
        debounce: int | None = None,
    ) -> HookAction:
        table = state.table(event.table_id)
        if table is None:
            raise UnknownTable(str(event.table_id))
        if isinstance(self.trigger, PostWriteTrigger):
            thresholds = thresholds if thresholds is not None else self.trigger.thresholds
            debounce = debounce if debounce is not None else self.trigger.debounce_seconds
        thresholds = thresholds or {}
        debounce = DEFAULT_DEBOUNCE_SECONDS if debounce is None else debounce

        last = self.last_hook_fire.get(event.table_id)
        if last is not None and event.now - last < debounce:
            return HOOK_NONE
        self.last_hook_fire[event.table_id] = event.now

        cands = self.cache.refresh_table(table, self.config)
        kept, _ = apply_filters(cands, rules_for(self.config), self.config, event.now)
        hits = []
        for cand, tv in zip(kept, compute_traits(kept, self.config, self.registry)):
            if any(tv.values.get(name, float("-inf")) >= limit for name, limit in thresholds.items()):
                hits.append(cand)
        if hits:
            return HookAction(HookKind.TRIGGER_COMPACTION, tuple(hits))
        self.dirty.add(event.table_id)
        return HookAction(HookKind.RECOMPUTE_TRAITS)

    def feedback(self, task: CompactionTask, succeeded: bool, table: TableState) -> list[Candidate]:
        """Refresh cached statistics for the task's table after execution.

        A failed task leaves the table untouched, so cached stats are kept.
        """
        if not succeeded:
            return []
        return self.cache.refresh_table(table, self.config)
