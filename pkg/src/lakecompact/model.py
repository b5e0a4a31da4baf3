"""Shared domain vocabulary: files, tables, candidates, plans and engine configuration.

All types are immutable value objects. Containers are canonicalized on
construction (partitions sorted by key, files by ``file_id``, tables by name,
databases by id) so that equality and serialization never depend on the order
in which a connector happened to list things.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType

from lakecompact.errors import ConfigError, ValidationError

MIB = 1024 * 1024
GB = 10**9

# Reserved partition key for unpartitioned tables; never part of a candidate id.
DEFAULT_PARTITION = "__default"

_ID_FORBIDDEN = (".", "/")


@dataclass(frozen=True, order=True)
class TableId:
    database: str
    name: str

    def __str__(self) -> str:
        return f"{self.database}.{self.name}"


@dataclass(frozen=True, slots=True)
class FileRecord:
    file_id: str
    size_bytes: int
    created_at: int
    partition_key: str | None = None

    def __post_init__(self) -> None:
        if self.size_bytes < 0:
            raise ValidationError("size_bytes", f"must be >= 0, got {self.size_bytes}")


def _freeze_partitions(
    partitions: Mapping[str, Iterable[FileRecord]],
) -> Mapping[str, tuple[FileRecord, ...]]:
    frozen = {
        key: tuple(sorted(files, key=lambda f: f.file_id))
        for key, files in sorted(partitions.items())
    }
    return MappingProxyType(frozen)


@dataclass(frozen=True)
class TableState:
    table_id: TableId
    created_at: int
    is_partitioned: bool
    partitions: Mapping[str, tuple[FileRecord, ...]]
    last_write_at: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "partitions", _freeze_partitions(self.partitions))
        keys = list(self.partitions)
        if not self.is_partitioned:
            if keys != [DEFAULT_PARTITION]:
                raise ValidationError(
                    "partitions", f"unpartitioned table must have exactly the key {DEFAULT_PARTITION!r}"
                )
        elif DEFAULT_PARTITION in self.partitions:
            raise ValidationError("partitions", f"{DEFAULT_PARTITION!r} is reserved for unpartitioned tables")
        seen: set[str] = set()
        for key, files in self.partitions.items():
            expected = None if key == DEFAULT_PARTITION else key
            for i, f in enumerate(files):
                if f.partition_key != expected:
                    raise ValidationError(
                        f"partitions.{key}[{i}]", f"file {f.file_id!r} carries partition_key {f.partition_key!r}"
                    )
                if f.file_id in seen:
                    raise ValidationError(f"partitions.{key}[{i}].file_id", f"duplicate file_id {f.file_id!r}")
                seen.add(f.file_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TableState):
            return NotImplemented
        return (
            self.table_id == other.table_id
            and self.created_at == other.created_at
            and self.is_partitioned == other.is_partitioned
            and self.last_write_at == other.last_write_at
            and dict(self.partitions) == dict(other.partitions)
        )

    __hash__ = None  # type: ignore[assignment]

    def files(self) -> Iterator[FileRecord]:
        for files in self.partitions.values():
            yield from files

    @property
    def file_count(self) -> int:
        return sum(len(files) for files in self.partitions.values())

    @property
    def total_bytes(self) -> int:
        return sum(f.size_bytes for f in self.files())


@dataclass(frozen=True)
class DatabaseState:
    database_id: str
    tables: tuple[TableState, ...]
    used_quota: int
    total_quota: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "tables", tuple(sorted(self.tables, key=lambda t: t.table_id)))
        if self.used_quota < 0:
            raise ValidationError("used_quota", f"must be >= 0, got {self.used_quota}")
        if self.total_quota <= 0:
            raise ValidationError("total_quota", f"must be > 0, got {self.total_quota}")
        names: set[str] = set()
        for i, table in enumerate(self.tables):
            if table.table_id.database != self.database_id:
                raise ValidationError(
                    f"tables[{i}].database",
                    f"table {table.table_id} listed under database {self.database_id!r}",
                )
            if table.table_id.name in names:
                raise ValidationError(f"tables[{i}].name", f"duplicate table {table.table_id}")
            names.add(table.table_id.name)


@dataclass(frozen=True)
class SnapshotDocument:
    format_version: int
    captured_at: int
    databases: tuple[DatabaseState, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "databases", tuple(sorted(self.databases, key=lambda d: d.database_id)))
        ids: set[str] = set()
        for i, db in enumerate(self.databases):
            if db.database_id in ids:
                raise ValidationError(f"databases[{i}].database_id", f"duplicate database {db.database_id!r}")
            ids.add(db.database_id)

    def tables(self) -> Iterator[TableState]:
        for db in self.databases:
            yield from db.tables

    def table(self, table_id: TableId) -> TableState | None:
        for db in self.databases:
            if db.database_id == table_id.database:
                for t in db.tables:
                    if t.table_id == table_id:
                        return t
        return None

    def quotas(self) -> dict[str, tuple[int, int]]:
        """``database_id -> (used_quota, total_quota)``."""
        return {db.database_id: (db.used_quota, db.total_quota) for db in self.databases}


def check_identifier(value: str, path: str) -> None:
    """Database and table names feed candidate ids, so they may not contain ``.`` or ``/``."""
    if not value:
        raise ValidationError(path, "must be a non-empty string")
    for ch in _ID_FORBIDDEN:
        if ch in value:
            raise ValidationError(path, f"{value!r} may not contain {ch!r}")


class ScopeKind(str, Enum):
    TABLE = "table"
    PARTITION = "partition"


@dataclass(frozen=True, order=True)
class CandidateScope:
    kind: ScopeKind
    table_id: TableId
    partition_key: str | None = None

    def __post_init__(self) -> None:
        if (self.kind is ScopeKind.PARTITION) != (self.partition_key is not None):
            raise ValueError("partition_key must be set iff kind is PARTITION")
        if self.partition_key == DEFAULT_PARTITION:
            raise ValueError(f"{DEFAULT_PARTITION!r} cannot be a partition scope")

    def overlaps(self, other: CandidateScope) -> bool:
        if self.table_id != other.table_id:
            return False
        if self.kind is ScopeKind.TABLE or other.kind is ScopeKind.TABLE:
            return True
        return self.partition_key == other.partition_key

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "database": self.table_id.database, "table": self.table_id.name}
        if self.partition_key is not None:
            out["partition_key"] = self.partition_key
        return out


def candidate_id_of(scope: CandidateScope) -> str:
    # Injective because identifiers cannot contain "." or "/" (check_identifier).
    base = f"{scope.table_id.database}.{scope.table_id.name}"
    if scope.kind is ScopeKind.PARTITION:
        return f"{base}/{scope.partition_key}"
    return base


@dataclass(frozen=True)
class CandidateStats:
    file_count: int
    total_bytes: int
    small_file_count: int
    created_at: int
    last_write_at: int


@dataclass(frozen=True)
class Candidate:
    candidate_id: str
    scope: CandidateScope
    files: tuple[FileRecord, ...]
    stats: CandidateStats

    @property
    def table_id(self) -> TableId:
        return self.scope.table_id

    @property
    def database_id(self) -> str:
        return self.scope.table_id.database


def make_candidate(
    scope: CandidateScope,
    files: Iterable[FileRecord],
    *,
    target_file_size_bytes: int,
    created_at: int = 0,
    last_write_at: int = 0,
) -> Candidate:
    files = tuple(files)
    stats = CandidateStats(
        file_count=len(files),
        total_bytes=sum(f.size_bytes for f in files),
        small_file_count=sum(1 for f in files if f.size_bytes < target_file_size_bytes),
        created_at=created_at,
        last_write_at=last_write_at,
    )
    return Candidate(candidate_id_of(scope), scope, files, stats)


class ScopeStrategy(str, Enum):
    TABLE_ONLY = "table_only"
    HYBRID = "hybrid"


class RankingMode(str, Enum):
    THRESHOLD = "threshold"
    MOOP = "moop"


def _default_weights() -> Mapping[str, float]:
    return {"file_count_reduction": 0.7, "compute_cost_gbhr": 0.3}


DEFAULT_FILTERS = ("recent_creation", "recent_write", "too_small", "nothing_to_do")


@dataclass(frozen=True)
class EngineConfig:
    target_file_size_bytes: int = 512 * MIB
    executor_memory_gb: float = 8.0
    rewrite_bytes_per_hour: float = 200 * GB
    weights: Mapping[str, float] = field(default_factory=_default_weights)
    ranking_mode: RankingMode = RankingMode.MOOP
    thresholds: Mapping[str, float] = field(default_factory=dict)
    budget_gbhr: float | None = None
    k: int | None = 10
    scope_strategy: ScopeStrategy = ScopeStrategy.TABLE_ONLY
    filters: tuple[str, ...] = DEFAULT_FILTERS
    min_table_age_seconds: int = 86_400
    min_candidate_bytes: int = 0
    recent_write_window_seconds: int = 0
    quota_adaptive_w1: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", MappingProxyType(dict(sorted(self.weights.items()))))
        object.__setattr__(self, "thresholds", MappingProxyType(dict(sorted(self.thresholds.items()))))
        object.__setattr__(self, "filters", tuple(self.filters))
        if self.target_file_size_bytes <= 0:
            raise ConfigError("target_file_size_bytes must be > 0")
        if not self.executor_memory_gb > 0:
            raise ConfigError("executor_memory_gb must be > 0")
        if not self.rewrite_bytes_per_hour > 0:
            raise ConfigError("rewrite_bytes_per_hour must be > 0")
        if self.budget_gbhr is not None and not self.budget_gbhr > 0:
            raise ConfigError("budget_gbhr must be > 0 when set")
        if self.k is not None and self.k <= 0:
            raise ConfigError("k must be > 0 when set")
        for name in ("min_table_age_seconds", "min_candidate_bytes", "recent_write_window_seconds"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name, w in self.weights.items():
            if not (math.isfinite(w) and w >= 0):
                raise ConfigError(f"weights.{name} must be a finite number >= 0")
        if self.ranking_mode is RankingMode.MOOP:
            if not self.weights:
                raise ConfigError("weights must be non-empty in moop mode")
            if abs(sum(self.weights.values()) - 1.0) > 1e-9:
                raise ConfigError(f"weights must sum to 1 (got {sum(self.weights.values())!r})")
            if self.budget_gbhr is None and self.k is None:
                raise ConfigError("moop mode needs budget_gbhr, k, or both")
            if self.quota_adaptive_w1:
                if "file_count_reduction" not in self.weights:
                    raise ConfigError("quota_adaptive_w1 requires a 'file_count_reduction' weight")
                if not any(w > 0 for n, w in self.weights.items() if n != "file_count_reduction"):
                    raise ConfigError("quota_adaptive_w1 requires a second positive weight to rebalance")
        elif not self.thresholds:
            raise ConfigError("threshold mode needs at least one threshold")


@dataclass(frozen=True)
class RationaleTerm:
    trait: str
    raw_value: float
    normalized_value: float
    weight: float
    contribution: float

    def to_dict(self) -> dict:
        return {
            "trait": self.trait,
            "raw": self.raw_value,
            "normalized": self.normalized_value,
            "weight": self.weight,
            "contribution": self.contribution,
        }


@dataclass(frozen=True)
class CompactionTask:
    candidate_id: str
    scope: CandidateScope
    estimated_gbhr: float
    score: float
    rationale: tuple[RationaleTerm, ...] = ()

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "scope": self.scope.to_dict(),
            "estimated_gbhr": self.estimated_gbhr,
            "score": self.score,
            "rationale": [term.to_dict() for term in self.rationale],
        }


@dataclass(frozen=True)
class Exclusion:
    candidate_id: str
    reason: str
    remaining_budget_gbhr: float | None = None

    def to_dict(self) -> dict:
        out: dict = {"candidate_id": self.candidate_id, "reason": self.reason}
        if self.remaining_budget_gbhr is not None:
            out["remaining_budget_gbhr"] = self.remaining_budget_gbhr
        return out


@dataclass(frozen=True)
class CompactionPlan:
    generated_at: int
    tasks: tuple[CompactionTask, ...]
    excluded: tuple[Exclusion, ...] = ()
    total_estimated_gbhr: float = 0.0

    def task_ids(self) -> list[str]:
        return [t.candidate_id for t in self.tasks]

    def to_dict(self) -> dict:
        return {
            "generated_at": self.generated_at,
            "tasks": [t.to_dict() for t in self.tasks],
            "excluded": [e.to_dict() for e in self.excluded],
            "total_estimated_gbhr": self.total_estimated_gbhr,
        }
