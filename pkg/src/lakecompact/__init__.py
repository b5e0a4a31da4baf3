"""Decision engine for small-file compaction in log-structured lake tables."""

from lakecompact.engine import PipelineResult, explain_candidate, plan_and_schedule, run_pipeline
from lakecompact.ingest import load_snapshot, parse_snapshot, snapshot_to_dict, write_snapshot
from lakecompact.model import (
    CandidateScope,
    CompactionPlan,
    CompactionTask,
    EngineConfig,
    FileRecord,
    RankingMode,
    ScopeKind,
    ScopeStrategy,
    SnapshotDocument,
    TableId,
    TableState,
)
from lakecompact.scheduler import DispatchSchedule, PeriodicTrigger, PostWriteTrigger, Scheduler, build_schedule

__version__ = "0.1.0"

__all__ = [
    "CandidateScope",
    "CompactionPlan",
    "CompactionTask",
    "DispatchSchedule",
    "EngineConfig",
    "FileRecord",
    "PeriodicTrigger",
    "PipelineResult",
    "PostWriteTrigger",
    "RankingMode",
    "ScopeKind",
    "ScopeStrategy",
    "Scheduler",
    "SnapshotDocument",
    "TableId",
    "TableState",
    "build_schedule",
    "explain_candidate",
    "load_snapshot",
    "parse_snapshot",
    "plan_and_schedule",
    "run_pipeline",
    "snapshot_to_dict",
    "write_snapshot",
]
