"""Discrete-event lake simulator for comparing compaction strategies."""

from lakecompact.simulator.config import (
    CompactionSettings,
    ConflictModel,
    ExecutionModel,
    PatternKind,
    SimConfig,
    TableTopology,
    WorkloadPattern,
    clocked,
    large_burst,
    short_burst,
    sinusoidal,
)
from lakecompact.simulator.sim import (
    CSV_HEADER,
    CompactionRecord,
    MetricsRow,
    RewriteUnit,
    SimResult,
    compare_strategies,
    first_round_reduction,
    pack,
    run,
    simulate,
)

__all__ = [
    "CSV_HEADER",
    "CompactionRecord",
    "CompactionSettings",
    "ConflictModel",
    "ExecutionModel",
    "MetricsRow",
    "PatternKind",
    "RewriteUnit",
    "SimConfig",
    "SimResult",
    "TableTopology",
    "WorkloadPattern",
    "clocked",
    "compare_strategies",
    "first_round_reduction",
    "large_burst",
    "pack",
    "run",
    "short_burst",
    "simulate",
    "sinusoidal",
]
