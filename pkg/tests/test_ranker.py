from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import candidate
from lakecompact.model import (
    CandidateScope,
    EngineConfig,
    RankingMode,
    ScopeKind,
    TableId,
)
from lakecompact.ranker import (
    BELOW_THRESHOLD,
    BUDGET_EXCEEDED,
    K_LIMIT,
    SCOPE_OVERLAP,
    RankingPolicy,
    ScoredCandidate,
    normalize,
    quota_weight,
    rank,
    score,
    select_budgeted,
    select_threshold,
)
from lakecompact.traits import Direction, TraitVector, compute_traits, default_registry

DIRS = {"file_count_reduction": Direction.BENEFIT, "compute_cost_gbhr": Direction.COST}
W = {"file_count_reduction": 0.7, "compute_cost_gbhr": 0.3}


def sc(cid: str, s: float, cost: float, partition: str | None = None) -> ScoredCandidate:
    kind = ScopeKind.PARTITION if partition else ScopeKind.TABLE
    return ScoredCandidate(cid, CandidateScope(kind, TableId("d", cid), partition), s, cost)


def test_normalize_example():
    assert [v for _, v in normalize([("a", 10), ("b", 20), ("c", 30)])] == [0.0, 0.5, 1.0]


def test_normalize_degenerate():
    assert [v for _, v in normalize([("a", 7), ("b", 7)])] == [0.0, 0.0]
    assert normalize([("a", 3.0)]) == [("a", 0.0)]
    assert normalize([]) == []


@pytest.mark.parametrize(
    "tn,expected",
    [((1.0, 0.0), 0.7), ((0.0, 1.0), -0.3), ((0.0, 0.0), 0.0)],
)
def test_score_examples(tn, expected):
    norm = {"file_count_reduction": tn[0], "compute_cost_gbhr": tn[1]}
    total, terms = score(norm, norm, W, DIRS)
    assert total == pytest.approx(expected, abs=1e-12)
    assert [t.trait for t in terms] == sorted(W)


def test_quota_weight_examples():
    assert quota_weight(0, 100) == 0.5
    assert quota_weight(100, 100) == 1.0
    assert quota_weight(50, 100) == 0.75
    assert quota_weight(150, 100) == 1.0


def test_quota_weight_rejects_bad_input():
    with pytest.raises(ValueError):
        quota_weight(1, 0)
    with pytest.raises(ValueError):
        quota_weight(-1, 10)


def test_weights_for_rescales_others():
    cfg = EngineConfig(
        weights={"file_count_reduction": 0.5, "compute_cost_gbhr": 0.3, "file_entropy": 0.2},
        quota_adaptive_w1=True,
    )
    w = RankingPolicy.from_config(cfg, default_registry()).weights_for((80, 100))
    assert w["file_count_reduction"] == pytest.approx(0.9)
    assert w["compute_cost_gbhr"] == pytest.approx(0.1 * 0.6)
    assert w["file_entropy"] == pytest.approx(0.1 * 0.4)
    assert sum(w.values()) == pytest.approx(1.0)


def test_threshold_examples():
    dirs = {"small_file_fraction": Direction.BENEFIT}
    a = TraitVector("a", {"small_file_fraction": 15 / 100}, dirs)
    b = TraitVector("b", {"small_file_fraction": 5 / 100}, dirs)
    assert select_threshold([a, b], {"small_file_fraction": 0.10}) == ["a"]
    assert select_threshold([], {"small_file_fraction": 0.10}) == []


def test_budget_example():
    pool = [sc("A", 0.9, 10), sc("B", 0.8, 10), sc("C", 0.7, 5)]
    plan = select_budgeted(pool, 16, None)
    assert plan.task_ids() == ["A", "C"]
    (ex,) = plan.excluded
    assert (ex.candidate_id, ex.reason, ex.remaining_budget_gbhr) == ("B", BUDGET_EXCEEDED, 6.0)
    assert plan.total_estimated_gbhr == 15


def test_k_only_takes_top_k():
    plan = select_budgeted([sc("A", 0.1, 1), sc("B", 0.9, 1), sc("C", 0.5, 1)], None, 2)
    assert plan.task_ids() == ["B", "C"]
    assert [(e.candidate_id, e.reason) for e in plan.excluded] == [("A", K_LIMIT)]


def test_ties_break_by_ascending_id():
    plan = select_budgeted([sc("c", 0.5, 1), sc("a", 0.5, 1), sc("b", 0.5, 1)], None, 10)
    assert plan.task_ids() == ["a", "b", "c"]


def test_overlapping_scopes_not_both_admitted():
    tid = TableId("d", "t")
    whole = ScoredCandidate("d.t", CandidateScope(ScopeKind.TABLE, tid), 0.9, 1)
    part = ScoredCandidate("d.t/p", CandidateScope(ScopeKind.PARTITION, tid, "p"), 0.8, 1)
    plan = select_budgeted([whole, part], None, 10)
    assert plan.task_ids() == ["d.t"]
    assert plan.excluded[0].reason == SCOPE_OVERLAP


def test_budget_never_exceeded_with_float_noise():
    pool = [sc(f"c{i}", 1.0 - i / 100, 0.1) for i in range(10)]
    plan = select_budgeted(pool, 0.3, None)
    # 0.1 is stored slightly above 1/10, so a third task would overshoot 0.3.
    assert len(plan.tasks) == 2
    assert plan.total_estimated_gbhr <= 0.3


def _pool(n):
    return [candidate([1] * (i + 2), name=f"t{i}", created_at=0) for i in range(n)]


def test_rank_threshold_mode_ordering_and_exclusions():
    cfg = EngineConfig(ranking_mode=RankingMode.THRESHOLD, thresholds={"file_count_reduction": 4})
    cands = _pool(4)
    traits = compute_traits(cands, cfg)
    out = rank(cands, traits, RankingPolicy.from_config(cfg, default_registry()), cfg)
    assert out.plan.task_ids() == ["d.t2", "d.t3"]
    assert {e.candidate_id: e.reason for e in out.plan.excluded} == {"d.t0": BELOW_THRESHOLD, "d.t1": BELOW_THRESHOLD}


def test_rank_moop_rationale_sums_to_score():
    cfg = EngineConfig(k=2)
    cands = _pool(5)
    out = rank(cands, compute_traits(cands, cfg), RankingPolicy.from_config(cfg, default_registry()), cfg)
    for task in out.plan.tasks:
        assert task.score == pytest.approx(sum(t.contribution for t in task.rationale), abs=1e-12)
    assert len(out.plan.tasks) == 2


def test_quota_adaptive_changes_scores_per_database():
    cfg = EngineConfig(quota_adaptive_w1=True)
    cands = [candidate([1] * 10, db="full", created_at=0), candidate([1] * 2, db="empty", created_at=0)]
    pol = RankingPolicy.from_config(cfg, default_registry())
    out = rank(cands, compute_traits(cands, cfg), pol, cfg, quotas={"full": (10, 10), "empty": (0, 10)})
    full = out.scored["full.t"]
    assert {t.trait: t.weight for t in full.rationale} == {"file_count_reduction": 1.0, "compute_cost_gbhr": 0.0}


def test_unknown_weight_trait():
    from lakecompact.errors import MissingTrait

    cfg = EngineConfig(weights={"nope": 1.0})
    with pytest.raises(MissingTrait):
        RankingPolicy.from_config(cfg, default_registry())


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40))
def test_normalized_in_unit_interval(values):
    out = normalize([(str(i), v) for i, v in enumerate(values)])
    assert all(0.0 <= v <= 1.0 for _, v in out)
    if max(values) > min(values):
        assert max(v for _, v in out) == 1.0 and min(v for _, v in out) == 0.0
