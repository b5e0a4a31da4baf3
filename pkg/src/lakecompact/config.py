"""JSON configuration shared by ``plan``, ``explain`` and ``simulate``.

Layout::

    {"engine":    {... EngineConfig fields ...},
     "trigger":   {"mode": "periodic", "interval_seconds": 3600, "blackout_windows": [[0, 3600]]}
                | {"mode": "post_write", "debounce_seconds": 300, "thresholds": {...}},
     "scheduler": {"max_parallel": 10, "serialize_tables": true},
     "simulator": {... SimConfig fields ..., "strategies": [{"name": ..., "engine": {overrides}}]}}

Every section is optional. Errors carry the offending field path.
"""

from __future__ import annotations

import json
import os
from collections.abc import Mapping
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from lakecompact.candidates import BUILTIN_RULES
from lakecompact.errors import ConfigError, ParseError
from lakecompact.model import EngineConfig, RankingMode, ScopeStrategy
from lakecompact.scheduler import PeriodicTrigger, PostWriteTrigger, TriggerMode
from lakecompact.serde import Reader
from lakecompact.simulator.config import (
    CompactionSettings,
    ConflictModel,
    ExecutionModel,
    PatternKind,
    SimConfig,
    TableTopology,
    WorkloadPattern,
)
from lakecompact.traits import default_registry

ENGINE_DEFAULTS = EngineConfig()


@dataclass(frozen=True)
class CliConfig:
    engine: EngineConfig = field(default_factory=EngineConfig)
    trigger: TriggerMode = field(default_factory=lambda: PeriodicTrigger(3600))
    max_parallel: int = 10
    serialize_tables: bool = True
    simulator: SimConfig | None = None
    strategies: tuple[CompactionSettings, ...] = ()

    def main_strategy(self) -> CompactionSettings:
        return CompactionSettings("engine", self.engine, self.trigger, self.max_parallel, self.serialize_tables)


def _reader(obj: Any, path: str) -> Reader:
    return Reader(obj, path, error=ConfigError)


def _build(path: str, cls, **kw):
    try:
        return cls(**kw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _number_map(r: Reader, key: str, default: Mapping) -> dict[str, float]:
    raw = r.mapping(key, default)
    sub = r.child(key, raw)
    out = {name: sub.number(name) for name in raw}
    names = set(default_registry().names())
    for name in out:
        if name not in names:
            sub.fail(name, f"unknown trait; known: {sorted(names)}")
    return out


def _enum(r: Reader, key: str, enum, default):
    value = r.str(key, default.value)
    try:
        return enum(value)
    except ValueError:
        r.fail(key, f"expected one of {[e.value for e in enum]}, got {value!r}")


def engine_from_dict(obj: Any, path: str = "engine") -> EngineConfig:
    r = _reader(obj, path)
    d = ENGINE_DEFAULTS
    filters = r.list("filters", list(d.filters))
    for i, name in enumerate(filters):
        if name not in BUILTIN_RULES:
            r.fail(f"filters[{i}]", f"unknown filter rule {name!r}; known: {sorted(BUILTIN_RULES)}")
    kw = dict(
        target_file_size_bytes=r.int("target_file_size_bytes", d.target_file_size_bytes, minimum=1),
        executor_memory_gb=r.number("executor_memory_gb", d.executor_memory_gb, positive=True),
        rewrite_bytes_per_hour=r.number("rewrite_bytes_per_hour", d.rewrite_bytes_per_hour, positive=True),
        weights=_number_map(r, "weights", d.weights),
        ranking_mode=_enum(r, "ranking_mode", RankingMode, d.ranking_mode),
        thresholds=_number_map(r, "thresholds", d.thresholds),
        budget_gbhr=r.number("budget_gbhr", None),
        k=r.int("k", d.k, nullable=True),
        scope_strategy=_enum(r, "scope_strategy", ScopeStrategy, d.scope_strategy),
        filters=tuple(filters),
        min_table_age_seconds=r.int("min_table_age_seconds", d.min_table_age_seconds, minimum=0),
        min_candidate_bytes=r.int("min_candidate_bytes", d.min_candidate_bytes, minimum=0),
        recent_write_window_seconds=r.int("recent_write_window_seconds", d.recent_write_window_seconds, minimum=0),
        quota_adaptive_w1=r.bool("quota_adaptive_w1", d.quota_adaptive_w1),
    )
    r.finish()
    return _build(path, EngineConfig, **kw)


def engine_to_dict(config: EngineConfig) -> dict:
    out = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, Mapping):
            value = dict(value)
        elif isinstance(value, tuple):
            value = list(value)
        elif hasattr(value, "value"):
            value = value.value
        out[f.name] = value
    return out


def _pair(r: Reader, key: str, default) -> tuple[int, int]:
    value = r.list(key, list(default))
    if len(value) != 2 or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
        r.fail(key, f"expected [min, max] integers, got {value!r}")
    return value[0], value[1]


def trigger_from_dict(obj: Any, path: str = "trigger") -> TriggerMode:
    r = _reader(obj, path)
    mode = r.str("mode", "periodic")
    if mode == "periodic":
        windows = []
        raw = r.list("blackout_windows", [])
        for i, w in enumerate(raw):
            if not isinstance(w, list) or len(w) != 2 or not all(isinstance(v, int) and not isinstance(v, bool) for v in w):
                r.fail(f"blackout_windows[{i}]", f"expected [start, end] seconds-of-day, got {w!r}")
            windows.append((w[0], w[1]))
        kw = dict(interval_seconds=r.int("interval_seconds", 3600), blackout_windows=tuple(windows))
        r.finish()
        return _build(path, PeriodicTrigger, **kw)
    if mode == "post_write":
        kw = dict(
            debounce_seconds=r.int("debounce_seconds", 300),
            thresholds=_number_map(r, "thresholds", {"small_file_fraction": 0.10}),
        )
        r.finish()
        return _build(path, PostWriteTrigger, **kw)
    r.fail("mode", f"expected 'periodic' or 'post_write', got {mode!r}")


def _table_from_dict(obj: Any, path: str) -> TableTopology:
    r = _reader(obj, path)
    d = TableTopology("x")
    kw = dict(
        name=r.str("name"),
        partitions=r.int("partitions", d.partitions, minimum=0),
        partition_granularity_seconds=r.int("partition_granularity_seconds", d.partition_granularity_seconds),
        initial_files=_pair(r, "initial_files", d.initial_files),
        initial_file_size_bytes=_pair(r, "initial_file_size_bytes", d.initial_file_size_bytes),
        write_share=r.number("write_share", d.write_share),
    )
    r.finish()
    return _build(path, TableTopology, **kw)


def _pattern_from_dict(obj: Any, path: str) -> WorkloadPattern:
    r = _reader(obj, path)
    kind = _enum(r, "kind", PatternKind, PatternKind.SINUSOIDAL)
    d = WorkloadPattern(kind, 0.0)
    fire = r.list("fire_times", [])
    for i, v in enumerate(fire):
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            r.fail(f"fire_times[{i}]", f"expected a non-negative integer, got {v!r}")
    kw = dict(
        kind=kind,
        rate=r.number("rate"),
        amplitude=r.number("amplitude", d.amplitude),
        period_seconds=r.int("period_seconds", d.period_seconds),
        burst_seconds=r.int("burst_seconds", d.burst_seconds),
        spacing_seconds=r.int("spacing_seconds", d.spacing_seconds),
        offset_seconds=r.int("offset_seconds", d.offset_seconds),
        fire_times=tuple(fire),
        write_mix=r.number("write_mix", d.write_mix),
        files_per_write=_pair(r, "files_per_write", d.files_per_write),
        file_size_bytes=_pair(r, "file_size_bytes", d.file_size_bytes),
    )
    r.finish()
    return _build(path, WorkloadPattern, **kw)


def _strategy_from_dict(obj: Any, path: str, base: CliConfig, base_engine: Mapping) -> CompactionSettings:
    r = _reader(obj, path)
    name = r.str("name")
    overrides = r.mapping("engine", {})
    engine = engine_from_dict({**base_engine, **overrides}, f"{path}.engine")
    trigger = trigger_from_dict(r.mapping("trigger"), f"{path}.trigger") if r.has("trigger") else base.trigger
    kw = dict(
        name=name,
        engine=engine,
        trigger=trigger,
        max_parallel=r.int("max_parallel", base.max_parallel, minimum=1),
        serialize_tables=r.bool("serialize_tables", base.serialize_tables),
    )
    r.finish()
    if name == "none":
        r.fail("name", "'none' is reserved for the no-compaction baseline")
    return _build(path, CompactionSettings, **kw)


def _simulator_from_dict(obj: Any, path: str) -> SimConfig:
    r = _reader(obj, path)
    d_conf, d_exec = ConflictModel(), ExecutionModel()
    tables = tuple(_table_from_dict(t, f"{path}.tables[{i}]") for i, t in enumerate(r.list("tables")))
    patterns = tuple(_pattern_from_dict(p, f"{path}.patterns[{i}]") for i, p in enumerate(r.list("patterns")))

    cr = r.child("conflicts", r.mapping("conflicts", {}))
    conflicts = _build(
        f"{path}.conflicts",
        ConflictModel,
        client_conflict_prob=cr.number("client_conflict_prob", d_conf.client_conflict_prob),
        retry_backoff_seconds=cr.int("retry_backoff_seconds", d_conf.retry_backoff_seconds),
        cluster_abort_on_overlap=cr.bool("cluster_abort_on_overlap", d_conf.cluster_abort_on_overlap),
    )
    cr.finish()
    er = r.child("execution", r.mapping("execution", {}))
    execution = _build(
        f"{path}.execution",
        ExecutionModel,
        target_file_size_bytes=er.int("target_file_size_bytes", d_exec.target_file_size_bytes, minimum=1),
        rewrite_bytes_per_hour=er.number("rewrite_bytes_per_hour", d_exec.rewrite_bytes_per_hour, positive=True),
        executor_memory_gb=er.number("executor_memory_gb", d_exec.executor_memory_gb, positive=True),
    )
    er.finish()

    defaults = SimConfig(seed=0, duration_seconds=1, tables=(TableTopology("x"),), patterns=(WorkloadPattern(PatternKind.SINUSOIDAL, 0.0),))
    kw = dict(
        seed=r.int("seed"),
        duration_seconds=r.int("duration_seconds"),
        tables=tables,
        patterns=patterns,
        num_databases=r.int("num_databases", defaults.num_databases),
        metrics_interval_seconds=r.int("metrics_interval_seconds", defaults.metrics_interval_seconds),
        target_files_per_hour=r.number("target_files_per_hour", None),
        small_file_bytes=r.int("small_file_bytes", defaults.small_file_bytes),
        total_quota=r.int("total_quota", defaults.total_quota),
        start_epoch=r.int("start_epoch", defaults.start_epoch),
        table_age_seconds=r.int("table_age_seconds", defaults.table_age_seconds, minimum=0),
        conflicts=conflicts,
        execution=execution,
    )
    r.raw("strategies", None)
    r.finish()
    return _build(path, SimConfig, **kw)


def config_from_dict(obj: Any) -> CliConfig:
    r = _reader(obj, "")
    engine_raw = r.mapping("engine", {})
    engine = engine_from_dict(engine_raw)
    trigger = trigger_from_dict(r.mapping("trigger", {}))
    sr = r.child("scheduler", r.mapping("scheduler", {}))
    max_parallel = sr.int("max_parallel", 10, minimum=1)
    serialize = sr.bool("serialize_tables", True)
    sr.finish()
    base = CliConfig(engine, trigger, max_parallel, serialize)

    simulator = None
    strategies: tuple[CompactionSettings, ...] = ()
    if r.has("simulator"):
        sim_raw = r.mapping("simulator")
        simulator = _simulator_from_dict(sim_raw, "simulator")
        raw = sim_raw.get("strategies", [])
        if not isinstance(raw, list):
            raise ConfigError("simulator.strategies: expected an array")
        strategies = tuple(
            _strategy_from_dict(s, f"simulator.strategies[{i}]", base, engine_raw) for i, s in enumerate(raw)
        )
        names = [s.name for s in strategies]
        if len(set(names)) != len(names):
            raise ConfigError("simulator.strategies: names must be unique")
    r.finish()
    return CliConfig(engine, trigger, max_parallel, serialize, simulator, strategies)


def load_config(source: str | os.PathLike) -> CliConfig:
    text = Path(source).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    return config_from_dict(obj)

