"""Reference lake and strategy set for the closed-loop comparison.

Each of the 20 databases holds an hourly-partitioned fact table that takes
most writes, an unpartitioned dimension table that takes the rest, and a
read-only lookup table. Write rates are calibrated to 2,640 new files per
hour across the lake.
"""

from __future__ import annotations

from lakecompact.model import EngineConfig, ScopeStrategy
from lakecompact.scheduler import PeriodicTrigger
from lakecompact.simulator.config import (
    HOUR,
    MB,
    CompactionSettings,
    SimConfig,
    TableTopology,
    clocked,
    large_burst,
    short_burst,
    sinusoidal,
)

REFERENCE_GROWTH_FILES_PER_HOUR = 2640.0
REFERENCE_THROUGHPUT_BYTES_PER_HOUR = 8e12


def reference_tables() -> tuple[TableTopology, ...]:
    return (
        TableTopology("lineitem", partitions=84, initial_files=(60, 72), write_share=0.8),
        TableTopology("orders", initial_files=(250, 280), write_share=0.2),
        TableTopology("customer", initial_files=(20, 40), initial_file_size_bytes=(32 * MB, 1000 * MB)),
    )


def reference_patterns(duration_seconds: int):
    hourly = range(HOUR // 2, duration_seconds, HOUR)
    return (
        sinusoidal(30.0, 15.0, 4 * HOUR),
        short_burst(120.0, burst_len=300, spacing=1800, write_mix=0.6),
        large_burst(60.0, burst_len=2400, spacing=3 * HOUR, offset_seconds=600),
        clocked(200.0, fire_times=hourly, burst_len=300, write_mix=0.5),
    )


def reference_config(seed: int = 1, duration_seconds: int = 5 * HOUR) -> SimConfig:
    return SimConfig(
        seed=seed,
        duration_seconds=duration_seconds,
        tables=reference_tables(),
        patterns=reference_patterns(duration_seconds),
        num_databases=20,
        target_files_per_hour=REFERENCE_GROWTH_FILES_PER_HOUR,
    )


def strategy(name: str, scope: ScopeStrategy, k: int, *, max_parallel: int = 10) -> CompactionSettings:
    engine = EngineConfig(
        weights={"file_count_reduction": 0.7, "compute_cost_gbhr": 0.3},
        k=k,
        scope_strategy=scope,
        rewrite_bytes_per_hour=REFERENCE_THROUGHPUT_BYTES_PER_HOUR,
    )
    return CompactionSettings(name, engine, PeriodicTrigger(HOUR), max_parallel=max_parallel)


def reference_strategies() -> list[CompactionSettings | None]:
    return [
        None,
        strategy("table-10", ScopeStrategy.TABLE_ONLY, 10),
        strategy("hybrid-50", ScopeStrategy.HYBRID, 50),
        strategy("hybrid-500", ScopeStrategy.HYBRID, 500),
    ]
