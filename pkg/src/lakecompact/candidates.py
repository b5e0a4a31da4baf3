"""Candidate generation at table or hybrid scope, and the pre-orient filter chain."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

from lakecompact.model import (
    MIB,
    Candidate,
    CandidateScope,
    EngineConfig,
    ScopeKind,
    ScopeStrategy,
    SnapshotDocument,
    TableState,
    make_candidate,
)

# (candidate, config, now) -> drop reason, or None to keep
Predicate = Callable[[Candidate, EngineConfig, int], "str | None"]


@dataclass(frozen=True)
class FilterRule:
    name: str
    predicate: Predicate

    def __call__(self, candidate: Candidate, config: EngineConfig, now: int) -> str | None:
        return self.predicate(candidate, config, now)


@dataclass(frozen=True)
class Dropped:
    candidate_id: str
    rule: str
    reason: str

    def to_dict(self) -> dict:
        return {"candidate_id": self.candidate_id, "rule": self.rule, "reason": self.reason}


def table_candidates(
    table: TableState, strategy: ScopeStrategy, target_file_size_bytes: int
) -> list[Candidate]:
    kw = dict(
        target_file_size_bytes=target_file_size_bytes,
        created_at=table.created_at,
        last_write_at=table.last_write_at,
    )
    if strategy is ScopeStrategy.HYBRID and table.is_partitioned:
        return [
            make_candidate(CandidateScope(ScopeKind.PARTITION, table.table_id, key), files, **kw)
            for key, files in table.partitions.items()
        ]
    return [make_candidate(CandidateScope(ScopeKind.TABLE, table.table_id), table.files(), **kw)]


def generate_candidates(
    snapshot: SnapshotDocument,
    strategy: ScopeStrategy = ScopeStrategy.TABLE_ONLY,
    *,
    target_file_size_bytes: int = 512 * MIB,
) -> list[Candidate]:
    """One candidate per table (TABLE_ONLY), or per partition of partitioned tables (HYBRID).

    A table never yields both a table-scope and a partition-scope candidate,
    so the pool is scope-disjoint. Sorted by candidate id.
    """
    out: list[Candidate] = []
    for table in snapshot.tables():
        out.extend(table_candidates(table, strategy, target_file_size_bytes))
    out.sort(key=lambda c: c.candidate_id)
    return out


def _recent_creation(c: Candidate, cfg: EngineConfig, now: int) -> str | None:
    age = now - c.stats.created_at
    if age < cfg.min_table_age_seconds:
        return f"table age {age}s < min_table_age_seconds {cfg.min_table_age_seconds}"
    return None


def _recent_write(c: Candidate, cfg: EngineConfig, now: int) -> str | None:
    since = now - c.stats.last_write_at
    if since < cfg.recent_write_window_seconds:
        return f"last write {since}s ago < recent_write_window_seconds {cfg.recent_write_window_seconds}"
    return None


def _too_small(c: Candidate, cfg: EngineConfig, now: int) -> str | None:
    if c.stats.total_bytes < cfg.min_candidate_bytes:
        return f"total_bytes {c.stats.total_bytes} < min_candidate_bytes {cfg.min_candidate_bytes}"
    return None


def _nothing_to_do(c: Candidate, cfg: EngineConfig, now: int) -> str | None:
    # Rewriting zero or one small file cannot lower the file count.
    if c.stats.small_file_count <= 1:
        return f"small_file_count {c.stats.small_file_count} <= 1"
    return None


BUILTIN_RULES: dict[str, FilterRule] = {
    rule.name: rule
    for rule in (
        FilterRule("recent_creation", _recent_creation),
        FilterRule("recent_write", _recent_write),
        FilterRule("too_small", _too_small),
        FilterRule("nothing_to_do", _nothing_to_do),
    )
}


def rules_for(config: EngineConfig, extra: Iterable[FilterRule] = ()) -> list[FilterRule]:
    """Built-in rules enabled in ``config.filters`` (in that order), then ``extra``."""
    rules = []
    for name in config.filters:
        if name not in BUILTIN_RULES:
            raise KeyError(f"unknown filter rule {name!r}; known: {sorted(BUILTIN_RULES)}")
        rules.append(BUILTIN_RULES[name])
    rules.extend(extra)
    return rules


def apply_filters(
    candidates: Sequence[Candidate],
    rules: Sequence[FilterRule],
    config: EngineConfig,
    now: int,
) -> tuple[list[Candidate], list[Dropped]]:
    """Each candidate is dropped by the first rule that rejects it; kept order is input order."""
    kept: list[Candidate] = []
    dropped: list[Dropped] = []
    for c in candidates:
        for rule in rules:
            reason = rule(c, config, now)
            if reason is not None:
                dropped.append(Dropped(c.candidate_id, rule.name, reason))
                break
        else:
            kept.append(c)
    return kept, dropped


__all__ = [
    "BUILTIN_RULES",
    "Dropped",
    "FilterRule",
    "apply_filters",
    "generate_candidates",
    "rules_for",
    "table_candidates",
]
