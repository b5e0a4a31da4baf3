"""Simulator configuration: lake topology, workload patterns, compaction settings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from lakecompact.errors import ConfigError
from lakecompact.model import MIB, EngineConfig
from lakecompact.scheduler import PeriodicTrigger, TriggerMode

MB = 10**6
HOUR = 3600


class PatternKind(str, Enum):
    SINUSOIDAL = "sinusoidal"
    SHORT_BURST = "short_burst"
    LARGE_BURST = "large_burst"
    CLOCKED = "clocked"


@dataclass(frozen=True)
class WorkloadPattern:
    """Query arrival pattern for one database, in queries per hour.

    * sinusoidal: ``rate + amplitude * sin(2*pi*(t - offset)/period)``, floored at 0
    * short_burst / large_burst: ``rate`` while ``(t - offset) mod spacing < burst``, else 0
    * clocked: ``rate`` during ``[f, f + burst)`` for every ``f`` in ``fire_times``

    A fraction ``write_mix`` of queries are writes; each write appends a
    uniform number of files in ``files_per_write`` with log-uniform sizes.
    """

    kind: PatternKind
    rate: float
    amplitude: float = 0.0
    period_seconds: int = HOUR
    burst_seconds: int = 600
    spacing_seconds: int = HOUR
    offset_seconds: int = 0
    fire_times: tuple[int, ...] = ()
    write_mix: float = 1.0
    files_per_write: tuple[int, int] = (1, 8)
    file_size_bytes: tuple[int, int] = (1 * MB, 256 * MB)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fire_times", tuple(sorted(self.fire_times)))
        object.__setattr__(self, "files_per_write", tuple(self.files_per_write))
        object.__setattr__(self, "file_size_bytes", tuple(self.file_size_bytes))
        if self.rate < 0 or self.amplitude < 0:
            raise ConfigError("pattern rates must be >= 0")
        if not 0 <= self.write_mix <= 1:
            raise ConfigError("pattern.write_mix must be in [0, 1]")
        lo, hi = self.files_per_write
        if not 1 <= lo <= hi:
            raise ConfigError("pattern.files_per_write must satisfy 1 <= min <= max")
        lo, hi = self.file_size_bytes
        if not 0 < lo <= hi:
            raise ConfigError("pattern.file_size_bytes must satisfy 0 < min <= max")
        if self.period_seconds <= 0 or self.spacing_seconds <= 0 or self.burst_seconds < 0:
            raise ConfigError("pattern periods must be > 0 and burst_seconds >= 0")

    def rate_at(self, t: float) -> float:
        if self.kind is PatternKind.SINUSOIDAL:
            phase = 2 * math.pi * (t - self.offset_seconds) / self.period_seconds
            return max(0.0, self.rate + self.amplitude * math.sin(phase))
        if self.kind is PatternKind.CLOCKED:
            for f in self.fire_times:
                if f <= t < f + self.burst_seconds:
                    return self.rate
            return 0.0
        if (t - self.offset_seconds) % self.spacing_seconds < self.burst_seconds:
            return self.rate
        return 0.0

    def peak_rate(self) -> float:
        if self.kind is PatternKind.SINUSOIDAL:
            return self.rate + self.amplitude
        return self.rate

    def mean_files_per_write(self) -> float:
        lo, hi = self.files_per_write
        return (lo + hi) / 2


def sinusoidal(base_rate: float, amplitude: float, period: int, **kw) -> WorkloadPattern:
    return WorkloadPattern(PatternKind.SINUSOIDAL, base_rate, amplitude=amplitude, period_seconds=period, **kw)


def short_burst(rate: float, burst_len: int, spacing: int, **kw) -> WorkloadPattern:
    return WorkloadPattern(PatternKind.SHORT_BURST, rate, burst_seconds=burst_len, spacing_seconds=spacing, **kw)


def large_burst(rate: float, burst_len: int, spacing: int, **kw) -> WorkloadPattern:
    return WorkloadPattern(PatternKind.LARGE_BURST, rate, burst_seconds=burst_len, spacing_seconds=spacing, **kw)


def clocked(rate: float, fire_times, burst_len: int = 600, **kw) -> WorkloadPattern:
    return WorkloadPattern(PatternKind.CLOCKED, rate, fire_times=tuple(fire_times), burst_seconds=burst_len, **kw)


@dataclass(frozen=True)
class TableTopology:
    """One table, replicated in every simulated database.

    ``partitions == 0`` means unpartitioned. Partitioned tables are keyed by
    ingestion time at ``partition_granularity_seconds``; ``partitions`` historic
    buckets before the simulation start hold the initial load. ``write_share``
    is the relative weight with which writes land on this table.
    """

    name: str
    partitions: int = 0
    partition_granularity_seconds: int = HOUR
    initial_files: tuple[int, int] = (50, 80)
    initial_file_size_bytes: tuple[int, int] = (1 * MB, 64 * MB)
    write_share: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "initial_files", tuple(self.initial_files))
        object.__setattr__(self, "initial_file_size_bytes", tuple(self.initial_file_size_bytes))
        if not self.name or "." in self.name or "/" in self.name:
            raise ConfigError(f"table name {self.name!r} must be non-empty without '.' or '/'")
        if self.partitions < 0 or self.partition_granularity_seconds <= 0:
            raise ConfigError("table.partitions must be >= 0 and granularity > 0")
        lo, hi = self.initial_files
        if not 0 <= lo <= hi:
            raise ConfigError("table.initial_files must satisfy 0 <= min <= max")
        lo, hi = self.initial_file_size_bytes
        if not 0 < lo <= hi:
            raise ConfigError("table.initial_file_size_bytes must satisfy 0 < min <= max")
        if self.write_share < 0:
            raise ConfigError("table.write_share must be >= 0")

    @property
    def is_partitioned(self) -> bool:
        return self.partitions > 0


@dataclass(frozen=True)
class CompactionSettings:
    name: str
    engine: EngineConfig
    trigger: TriggerMode = field(default_factory=lambda: PeriodicTrigger(HOUR))
    max_parallel: int = 10
    # False only for ablations: lets tasks on one table run concurrently.
    serialize_tables: bool = True

    def __post_init__(self) -> None:
        if self.max_parallel <= 0:
            raise ConfigError("compaction.max_parallel must be > 0")


@dataclass(frozen=True)
class ConflictModel:
    client_conflict_prob: float = 1.0
    retry_backoff_seconds: int = 30
    cluster_abort_on_overlap: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.client_conflict_prob <= 1:
            raise ConfigError("conflicts.client_conflict_prob must be in [0, 1]")
        if self.retry_backoff_seconds < 0:
            raise ConfigError("conflicts.retry_backoff_seconds must be >= 0")


@dataclass(frozen=True)
class ExecutionModel:
    """Physical compaction model; unset fields fall back to the engine's estimates."""

    target_file_size_bytes: int | None = None
    rewrite_bytes_per_hour: float | None = None
    executor_memory_gb: float | None = None


@dataclass(frozen=True)
class SimConfig:
    seed: int
    duration_seconds: int
    tables: tuple[TableTopology, ...]
    patterns: tuple[WorkloadPattern, ...]
    num_databases: int = 20
    metrics_interval_seconds: int = 60
    target_files_per_hour: float | None = None
    small_file_bytes: int = 512 * MIB
    total_quota: int = 1_000_000
    start_epoch: int = 1_704_067_200
    table_age_seconds: int = 30 * 86_400
    compaction: CompactionSettings | None = None
    conflicts: ConflictModel = field(default_factory=ConflictModel)
    execution: ExecutionModel = field(default_factory=ExecutionModel)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tables", tuple(self.tables))
        object.__setattr__(self, "patterns", tuple(self.patterns))
        if self.duration_seconds <= 0:
            raise ConfigError("simulator.duration_seconds must be > 0")
        if self.metrics_interval_seconds <= 0:
            raise ConfigError("simulator.metrics_interval_seconds must be > 0")
        if self.num_databases <= 0:
            raise ConfigError("simulator.num_databases must be > 0")
        if not self.tables:
            raise ConfigError("simulator.tables must be non-empty")
        if len({t.name for t in self.tables}) != len(self.tables):
            raise ConfigError("simulator.tables names must be unique")
        if not self.patterns:
            raise ConfigError("simulator.patterns must be non-empty")
        if self.target_files_per_hour is not None and not self.target_files_per_hour > 0:
            raise ConfigError("simulator.target_files_per_hour must be > 0")
        if self.small_file_bytes <= 0 or self.total_quota <= 0:
            raise ConfigError("simulator.small_file_bytes and total_quota must be > 0")
        if not any(t.write_share > 0 for t in self.tables) and any(p.rate > 0 for p in self.patterns):
            raise ConfigError("at least one table needs write_share > 0")

    def database_ids(self) -> list[str]:
        width = max(2, len(str(self.num_databases - 1)))
        return [f"db{i:0{width}d}" for i in range(self.num_databases)]
