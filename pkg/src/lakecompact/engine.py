"""End-to-end planning: observe, filter, orient, decide, then schedule."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, replace

from lakecompact.candidates import Dropped, FilterRule, apply_filters, generate_candidates, rules_for
from lakecompact.errors import UnknownCandidate
from lakecompact.model import Candidate, CompactionPlan, EngineConfig, Exclusion, SnapshotDocument
from lakecompact.ranker import RankingOutcome, RankingPolicy, rank
from lakecompact.scheduler import DispatchSchedule, build_schedule
from lakecompact.traits import TraitRegistry, TraitVector, compute_traits, default_registry

FILTERED_PREFIX = "filtered:"


@dataclass(frozen=True)
class PipelineResult:
    now: int
    config: EngineConfig
    candidates: list[Candidate]
    kept: list[Candidate]
    dropped: list[Dropped]
    traits: list[TraitVector]
    ranking: RankingOutcome
    plan: CompactionPlan


def run_pipeline(
    snapshot: SnapshotDocument,
    config: EngineConfig,
    now: int,
    *,
    registry: TraitRegistry | None = None,
    extra_rules: Iterable[FilterRule] = (),
) -> PipelineResult:
    registry = registry if registry is not None else default_registry()
    policy = RankingPolicy.from_config(config, registry)
    candidates = generate_candidates(
        snapshot, config.scope_strategy, target_file_size_bytes=config.target_file_size_bytes
    )
    kept, dropped = apply_filters(candidates, rules_for(config, extra_rules), config, now)
    traits = compute_traits(kept, config, registry)
    ranking = rank(kept, traits, policy, config, quotas=snapshot.quotas(), now=now)
    excluded = [Exclusion(d.candidate_id, FILTERED_PREFIX + d.rule) for d in dropped]
    excluded.extend(ranking.plan.excluded)
    excluded.sort(key=lambda e: e.candidate_id)
    plan = replace(ranking.plan, excluded=tuple(excluded))
    return PipelineResult(now, config, candidates, kept, dropped, traits, ranking, plan)


def plan_document(plan: CompactionPlan, schedule: DispatchSchedule) -> dict:
    return {"plan": plan.to_dict(), "schedule": schedule.to_dict()}


def plan_and_schedule(
    snapshot: SnapshotDocument,
    config: EngineConfig,
    now: int,
    max_parallel: int,
    **kw,
) -> tuple[PipelineResult, DispatchSchedule]:
    result = run_pipeline(snapshot, config, now, **kw)
    return result, build_schedule(result.plan, max_parallel)


def explain_candidate(result: PipelineResult, candidate_id: str, registry: TraitRegistry | None = None) -> dict:
    """Everything the pipeline knows about one (pre-filter) candidate, in a fixed key order."""
    registry = registry if registry is not None else default_registry()
    cand = next((c for c in result.candidates if c.candidate_id == candidate_id), None)
    if cand is None:
        raise UnknownCandidate(f"unknown candidate {candidate_id!r}")

    drop = next((d for d in result.dropped if d.candidate_id == candidate_id), None)
    out: dict = {
        "candidate_id": candidate_id,
        "scope": cand.scope.to_dict(),
        "stats": {
            "file_count": cand.stats.file_count,
            "total_bytes": cand.stats.total_bytes,
            "small_file_count": cand.stats.small_file_count,
        },
        "filter": {"kept": drop is None},
    }
    if drop is not None:
        out["filter"].update(rule=drop.rule, reason=drop.reason)
        # Filtered candidates never reach the orient phase; show raw traits for context only.
        raw = compute_traits([cand], result.config, registry)[0].values
        out["traits"] = {"raw": dict(raw), "normalized": None}
        out["score"] = None
        out["contributions"] = []
        out["selection"] = {"status": "filtered", "reason": FILTERED_PREFIX + drop.rule}
        return out

    tv = next(t for t in result.traits if t.candidate_id == candidate_id)
    scored = result.ranking.scored[candidate_id]
    out["traits"] = {"raw": dict(tv.values), "normalized": dict(result.ranking.normalized[candidate_id])}
    out["contributions"] = [t.to_dict() for t in scored.rationale]
    out["score"] = scored.score
    out["estimated_gbhr"] = scored.gbhr
    ids = result.plan.task_ids()
    if candidate_id in ids:
        out["selection"] = {"status": "selected", "priority": ids.index(candidate_id)}
    else:
        ex = next(e for e in result.plan.excluded if e.candidate_id == candidate_id)
        out["selection"] = {"status": "excluded", "reason": ex.reason}
        if ex.remaining_budget_gbhr is not None:
            out["selection"]["remaining_budget_gbhr"] = ex.remaining_budget_gbhr
    return out
