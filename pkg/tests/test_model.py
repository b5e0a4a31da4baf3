from __future__ import annotations

import pytest

from builders import table
from lakecompact.errors import ConfigError, ValidationError
from lakecompact.model import (
    DEFAULT_PARTITION,
    CandidateScope,
    DatabaseState,
    EngineConfig,
    FileRecord,
    RankingMode,
    ScopeKind,
    SnapshotDocument,
    TableId,
    TableState,
    candidate_id_of,
    check_identifier,
)


def test_candidate_id_table_scope():
    assert candidate_id_of(CandidateScope(ScopeKind.TABLE, TableId("a", "t"))) == "a.t"


def test_candidate_id_partition_scope():
    assert candidate_id_of(CandidateScope(ScopeKind.PARTITION, TableId("a", "t"), "2024-01")) == "a.t/2024-01"


def test_distinct_partitions_get_distinct_ids():
    tid = TableId("a", "t")
    ids = {candidate_id_of(CandidateScope(ScopeKind.PARTITION, tid, k)) for k in ("2024-01", "2024-02")}
    assert len(ids) == 2


@pytest.mark.parametrize("bad", ["a.b", "a/b", ""])
def test_identifiers_reject_separators(bad):
    with pytest.raises(ValidationError):
        check_identifier(bad, "name")


def test_scope_overlap():
    tid = TableId("a", "t")
    whole = CandidateScope(ScopeKind.TABLE, tid)
    p1 = CandidateScope(ScopeKind.PARTITION, tid, "1")
    p2 = CandidateScope(ScopeKind.PARTITION, tid, "2")
    other = CandidateScope(ScopeKind.TABLE, TableId("a", "u"))
    assert whole.overlaps(p1) and p1.overlaps(whole)
    assert not p1.overlaps(p2)
    assert not whole.overlaps(other)


def test_negative_file_size_rejected():
    with pytest.raises(ValidationError):
        FileRecord("f", -1, 0)


def test_partitions_are_canonicalized():
    a = table("d", "t", {"b": [1, 2], "a": [3]})
    assert list(a.partitions) == ["a", "b"]
    assert [f.file_id for f in a.partitions["b"]] == sorted(f.file_id for f in a.partitions["b"])
    assert a.file_count == 3 and a.total_bytes == 6


def test_unpartitioned_table_needs_default_key():
    with pytest.raises(ValidationError):
        TableState(TableId("d", "t"), 0, False, {"x": ()}, 0)


def test_default_key_reserved_for_unpartitioned():
    with pytest.raises(ValidationError):
        TableState(TableId("d", "t"), 0, True, {DEFAULT_PARTITION: ()}, 0)


def test_file_partition_key_must_match():
    f = FileRecord("f", 1, 0, "other")
    with pytest.raises(ValidationError, match="partition_key"):
        TableState(TableId("d", "t"), 0, True, {"p": (f,)}, 0)


def test_duplicate_file_id_rejected():
    f = FileRecord("f", 1, 0, None)
    with pytest.raises(ValidationError, match="duplicate"):
        TableState(TableId("d", "t"), 0, False, {DEFAULT_PARTITION: (f, f)}, 0)


def test_zero_total_quota_rejected():
    with pytest.raises(ValidationError, match="total_quota"):
        DatabaseState("d", (), 0, 0)


def test_table_must_belong_to_database():
    with pytest.raises(ValidationError):
        DatabaseState("d", (table("e", "t", flat=[]),), 0, 1)


def test_duplicate_database_rejected():
    with pytest.raises(ValidationError):
        SnapshotDocument(1, 0, (DatabaseState("d", (), 0, 1), DatabaseState("d", (), 0, 1)))


def test_snapshot_lookup_and_quotas():
    t = table("d", "t", flat=[1])
    doc = SnapshotDocument(1, 0, (DatabaseState("d", (t,), 3, 10),))
    assert doc.table(TableId("d", "t")) == t
    assert doc.table(TableId("d", "x")) is None
    assert doc.quotas() == {"d": (3, 10)}


def test_engine_config_defaults_are_valid():
    cfg = EngineConfig()
    assert dict(cfg.weights) == {"compute_cost_gbhr": 0.3, "file_count_reduction": 0.7}
    assert cfg.target_file_size_bytes == 512 * 2**20


@pytest.mark.parametrize(
    "kw",
    [
        {"weights": {"file_count_reduction": 0.5, "compute_cost_gbhr": 0.3}},
        {"k": None, "budget_gbhr": None},
        {"k": 0},
        {"budget_gbhr": 0.0},
        {"target_file_size_bytes": 0},
        {"ranking_mode": RankingMode.THRESHOLD},
        {"quota_adaptive_w1": True, "weights": {"file_count_reduction": 1.0}},
        {"weights": {"file_count_reduction": 1.2, "compute_cost_gbhr": -0.2}},
    ],
)
def test_engine_config_rejects(kw):
    with pytest.raises(ConfigError):
        EngineConfig(**kw)
