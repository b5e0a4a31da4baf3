"""Write-stream generation.

Arrivals follow a non-homogeneous Poisson process per database, sampled by
thinning against the pattern's peak rate. The whole stream is generated up
front from the seed so every compared strategy sees the same writes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from lakecompact.simulator.config import HOUR, SimConfig, TableTopology, WorkloadPattern


@dataclass(frozen=True)
class WriteSpec:
    t: int
    database: str
    table: str
    sizes: tuple[int, ...]


def log_uniform(rng: random.Random, lo: int, hi: int) -> int:
    if lo == hi:
        return lo
    return min(hi, max(lo, int(math.exp(rng.uniform(math.log(lo), math.log(hi))))))


def pattern_for(config: SimConfig, index: int) -> WorkloadPattern:
    return config.patterns[index % len(config.patterns)]


def expected_files(pattern: WorkloadPattern, duration_seconds: int, scale: float = 1.0) -> float:
    """Expected appended files over ``[0, duration)``, by midpoint integration per second."""
    queries = sum(pattern.rate_at(s + 0.5) for s in range(duration_seconds)) / HOUR
    return scale * queries * pattern.write_mix * pattern.mean_files_per_write()


def rate_scale(config: SimConfig) -> float:
    """Factor applied to every pattern rate so the lake-wide growth matches
    ``target_files_per_hour`` in expectation; 1.0 when no target is set."""
    if config.target_files_per_hour is None:
        return 1.0
    per_pattern = {}
    total = 0.0
    for i in range(config.num_databases):
        p = pattern_for(config, i)
        if p not in per_pattern:
            per_pattern[p] = expected_files(p, config.duration_seconds)
        total += per_pattern[p]
    if total == 0:
        return 1.0
    wanted = config.target_files_per_hour * config.duration_seconds / HOUR
    return wanted / total


def _arrivals(pattern: WorkloadPattern, duration: int, scale: float, rng: random.Random) -> list[int]:
    peak = pattern.peak_rate() * scale / HOUR
    if peak <= 0:
        return []
    out = []
    t = 0.0
    while True:
        t += rng.expovariate(peak)
        if t >= duration:
            return out
        if rng.random() * peak < pattern.rate_at(t) * scale / HOUR:
            out.append(int(t))


def generate_writes(config: SimConfig) -> list[WriteSpec]:
    scale = rate_scale(config)
    writable = [t for t in config.tables if t.write_share > 0]
    shares = [t.write_share for t in writable]
    writes: list[WriteSpec] = []
    for i, db in enumerate(config.database_ids()):
        pattern = pattern_for(config, i)
        rng = random.Random(f"{config.seed}/writes/{db}")
        lo, hi = pattern.files_per_write
        smin, smax = pattern.file_size_bytes
        for t in _arrivals(pattern, config.duration_seconds, scale, rng):
            if rng.random() >= pattern.write_mix:
                continue
            table = rng.choices(writable, weights=shares)[0]
            sizes = tuple(log_uniform(rng, smin, smax) for _ in range(rng.randint(lo, hi)))
            writes.append(WriteSpec(t, db, table.name, sizes))
    writes.sort(key=lambda w: (w.t, w.database))
    return writes


def initial_files(config: SimConfig, database: str, table: TableTopology) -> dict[int | None, list[int]]:
    """File sizes of the initial load, keyed by partition bucket offset
    (``-partitions .. -1``) or ``None`` for unpartitioned tables."""
    rng = random.Random(f"{config.seed}/initial/{database}/{table.name}")
    lo, hi = table.initial_files
    smin, smax = table.initial_file_size_bytes
    buckets: list[int | None] = list(range(-table.partitions, 0)) if table.is_partitioned else [None]
    return {b: [log_uniform(rng, smin, smax) for _ in range(rng.randint(lo, hi))] for b in buckets}
