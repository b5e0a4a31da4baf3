"""Decide phase: min-max normalization, weighted-sum scoring and task selection.

Two regimes are supported. Threshold mode selects every candidate whose
trait meets a configured threshold, with no resource limit. MOOP mode scores
each candidate as the signed weighted sum of its normalized traits (benefit
traits add, cost traits subtract) and fills a GBHr budget and/or a fixed task
count greedily in descending score order.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from lakecompact.errors import MissingTrait
from lakecompact.model import (
    Candidate,
    CandidateScope,
    CompactionPlan,
    CompactionTask,
    EngineConfig,
    Exclusion,
    RankingMode,
    RationaleTerm,
    TableId,
)
from lakecompact.traits import Direction, TraitRegistry, TraitVector, compute_cost_gbhr

BENEFIT_WEIGHT_TRAIT = "file_count_reduction"

BUDGET_EXCEEDED = "budget_exceeded"
K_LIMIT = "k_limit_reached"
BELOW_THRESHOLD = "below_threshold"
SCOPE_OVERLAP = "scope_overlap"


def normalize(values: Sequence[tuple[str, float]]) -> list[tuple[str, float]]:
    """Min-max scale raw values to [0, 1]; a constant column maps to all zeros."""
    if not values:
        return []
    raws = [v for _, v in values]
    lo, hi = min(raws), max(raws)
    span = hi - lo
    if span == 0:
        return [(cid, 0.0) for cid, _ in values]
    # min() guards against 1 + epsilon from rounding.
    return [(cid, min(1.0, (v - lo) / span)) for cid, v in values]


def quota_weight(used_quota: int, total_quota: int) -> float:
    """Benefit weight raised with quota utilization: 0.5 at empty, 1.0 at full.

    Utilization above 100% is clamped so the remaining weights stay >= 0.
    """
    if total_quota <= 0:
        raise ValueError("total_quota must be > 0")
    if used_quota < 0:
        raise ValueError("used_quota must be >= 0")
    return 0.5 * (1 + min(used_quota / total_quota, 1.0))


@dataclass(frozen=True)
class RankingPolicy:
    mode: RankingMode
    weights: Mapping[str, float]
    directions: Mapping[str, Direction]
    thresholds: Mapping[str, float] = field(default_factory=dict)
    quota_adaptive_w1: bool = False
    budget_gbhr: float | None = None
    fixed_k: int | None = None

    @classmethod
    def from_config(cls, config: EngineConfig, registry: TraitRegistry) -> RankingPolicy:
        directions = {}
        for name in list(config.weights) + list(config.thresholds):
            if name not in registry:
                raise MissingTrait(name)
            directions[name] = registry[name].direction
        return cls(
            mode=config.ranking_mode,
            weights=dict(config.weights),
            directions=directions,
            thresholds=dict(config.thresholds),
            quota_adaptive_w1=config.quota_adaptive_w1,
            budget_gbhr=config.budget_gbhr,
            fixed_k=config.k,
        )

    def weights_for(self, quota: tuple[int, int] | None) -> dict[str, float]:
        """Per-candidate weights; quota-adaptive mode overrides the benefit weight
        and rescales the others so the total stays 1."""
        weights = dict(self.weights)
        if not self.quota_adaptive_w1 or quota is None:
            return weights
        w1 = quota_weight(*quota)
        rest = {k: v for k, v in weights.items() if k != BENEFIT_WEIGHT_TRAIT}
        rest_total = sum(rest.values())
        weights[BENEFIT_WEIGHT_TRAIT] = w1
        for k, v in rest.items():
            weights[k] = (1.0 - w1) * v / rest_total if rest_total else 0.0
        return weights


def score(
    raw: Mapping[str, float],
    normalized: Mapping[str, float],
    weights: Mapping[str, float],
    directions: Mapping[str, Direction],
    candidate_id: str | None = None,
) -> tuple[float, tuple[RationaleTerm, ...]]:
    """Signed weighted sum of normalized traits, with one rationale term per weight."""
    terms = []
    for name in sorted(weights):
        if name not in normalized or name not in raw:
            raise MissingTrait(name, candidate_id)
        w = weights[name]
        contribution = directions[name].sign * w * normalized[name]
        terms.append(RationaleTerm(name, raw[name], normalized[name], w, contribution))
    total = 0.0
    for t in terms:
        total += t.contribution
    return total, tuple(terms)


def select_threshold(
    traits: Sequence[TraitVector], thresholds: Mapping[str, float]
) -> list[str]:
    """Ids of candidates meeting at least one threshold (value >= threshold), sorted."""
    selected = []
    for tv in traits:
        for name, limit in thresholds.items():
            if name not in tv.values:
                raise MissingTrait(name, tv.candidate_id)
        if any(tv.values[name] >= limit for name, limit in thresholds.items()):
            selected.append(tv.candidate_id)
    return sorted(selected)


@dataclass(frozen=True)
class ScoredCandidate:
    candidate_id: str
    scope: CandidateScope
    score: float
    gbhr: float
    rationale: tuple[RationaleTerm, ...] = ()

    def to_task(self) -> CompactionTask:
        return CompactionTask(self.candidate_id, self.scope, self.gbhr, self.score, self.rationale)


def select_budgeted(
    ranked: Sequence[ScoredCandidate],
    budget_gbhr: float | None,
    fixed_k: int | None,
    *,
    generated_at: int = 0,
) -> CompactionPlan:
    """Greedy first-fit-decreasing selection.

    Candidates are scanned by descending score, ties by ascending id. A
    candidate is admitted iff it fits the remaining budget and fewer than
    ``fixed_k`` tasks are admitted; a too-expensive candidate is skipped and
    the scan continues. Budget accounting is exact (rational arithmetic), so
    the admitted total never exceeds the budget.
    """
    order = sorted(ranked, key=lambda s: (-s.score, s.candidate_id))
    budget = Fraction(budget_gbhr) if budget_gbhr is not None else None
    used = Fraction(0)
    tasks: list[CompactionTask] = []
    excluded: list[Exclusion] = []
    admitted: dict[TableId, set[str | None]] = {}
    for cand in order:
        remaining = float(budget - used) if budget is not None else None
        if fixed_k is not None and len(tasks) >= fixed_k:
            excluded.append(Exclusion(cand.candidate_id, K_LIMIT, remaining))
            continue
        taken = admitted.get(cand.scope.table_id)
        if taken is not None and (
            None in taken or cand.scope.partition_key is None or cand.scope.partition_key in taken
        ):
            excluded.append(Exclusion(cand.candidate_id, SCOPE_OVERLAP, remaining))
            continue
        cost = Fraction(cand.gbhr)
        if budget is not None and used + cost > budget:
            excluded.append(Exclusion(cand.candidate_id, BUDGET_EXCEEDED, remaining))
            continue
        used += cost
        admitted.setdefault(cand.scope.table_id, set()).add(cand.scope.partition_key)
        tasks.append(cand.to_task())
    return CompactionPlan(generated_at, tuple(tasks), tuple(excluded), float(used))


@dataclass(frozen=True)
class RankingOutcome:
    plan: CompactionPlan
    normalized: dict[str, dict[str, float]]
    scored: dict[str, ScoredCandidate]


def rank(
    candidates: Sequence[Candidate],
    traits: Sequence[TraitVector],
    policy: RankingPolicy,
    config: EngineConfig,
    *,
    quotas: Mapping[str, tuple[int, int]] | None = None,
    now: int = 0,
) -> RankingOutcome:
    """Normalize over the given pool, score every candidate and build the plan."""
    quotas = quotas or {}
    by_id = {c.candidate_id: c for c in candidates}
    names = sorted({name for tv in traits for name in tv.values})
    columns = {
        name: dict(normalize([(tv.candidate_id, tv.values[name]) for tv in traits if name in tv.values]))
        for name in names
    }
    normalized = {tv.candidate_id: {n: columns[n][tv.candidate_id] for n in tv.values} for tv in traits}

    scored: dict[str, ScoredCandidate] = {}
    for tv in traits:
        cand = by_id[tv.candidate_id]
        weights = policy.weights_for(quotas.get(cand.database_id))
        s, rationale = score(tv.values, normalized[tv.candidate_id], weights, policy.directions, tv.candidate_id)
        gbhr = compute_cost_gbhr(cand, config.executor_memory_gb, config.rewrite_bytes_per_hour)
        scored[tv.candidate_id] = ScoredCandidate(tv.candidate_id, cand.scope, s, gbhr, rationale)

    if policy.mode is RankingMode.THRESHOLD:
        chosen = select_threshold(traits, policy.thresholds)
        chosen_set = set(chosen)
        tasks = tuple(scored[cid].to_task() for cid in chosen)
        excluded = tuple(
            Exclusion(cid, BELOW_THRESHOLD) for cid in sorted(scored) if cid not in chosen_set
        )
        total = 0.0
        for t in tasks:
            total += t.estimated_gbhr
        plan = CompactionPlan(now, tasks, excluded, total)
    else:
        plan = select_budgeted(list(scored.values()), policy.budget_gbhr, policy.fixed_k, generated_at=now)
    return RankingOutcome(plan, normalized, scored)


__all__ = [
    "BUDGET_EXCEEDED",
    "BELOW_THRESHOLD",
    "K_LIMIT",
    "RankingOutcome",
    "RankingPolicy",
    "SCOPE_OVERLAP",
    "ScoredCandidate",
    "normalize",
    "quota_weight",
    "rank",
    "score",
    "select_budgeted",
    "select_threshold",
]
