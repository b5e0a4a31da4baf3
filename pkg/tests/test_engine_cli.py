from __future__ import annotations

import json

import pytest

from lakecompact.cli import main
from lakecompact.engine import explain_candidate, run_pipeline
from lakecompact.errors import UnknownCandidate
from lakecompact.ingest import load_snapshot
from lakecompact.model import MIB, EngineConfig

NOW = 1_704_067_200


def fixture_engine():
    return EngineConfig(budget_gbhr=0.05, k=10)


def gbhr(mib: int) -> float:
    return 8 * mib * MIB / 200e9


def test_fixture_plan_matches_hand_trace(fixtures):
    result = run_pipeline(load_snapshot(fixtures / "snapshot.json"), fixture_engine(), NOW)
    plan = result.plan
    assert plan.task_ids() == ["web.clicks", "sales.orders"]
    # dF over kept pool {events 5, orders 3, clicks 6}; GBHr spans 60..1050 MiB.
    clicks = plan.tasks[0]
    assert clicks.score == pytest.approx(0.7 * 1.0 - 0.3 * (384 - 60) / (1050 - 60), abs=1e-12)
    assert plan.tasks[1].score == 0.0
    reasons = {e.candidate_id: e for e in plan.excluded}
    assert reasons["sales.events"].reason == "budget_exceeded"
    assert reasons["sales.events"].remaining_budget_gbhr == pytest.approx(0.05 - gbhr(384), abs=1e-15)
    assert reasons["sales.fresh"].reason == "filtered:recent_creation"
    assert reasons["sales.archive"].reason == "filtered:nothing_to_do"
    assert plan.total_estimated_gbhr == pytest.approx(gbhr(384) + gbhr(60), rel=1e-12)


def test_cli_plan_matches_golden(fixtures, tmp_path):
    out = tmp_path / "plan.json"
    rc = main(["plan", "--snapshot", str(fixtures / "snapshot.json"), "--config", str(fixtures / "config.json"),
               "--now", str(NOW), "--out", str(out)])
    assert rc == 0
    assert out.read_bytes() == (fixtures / "golden_plan.json").read_bytes()


def test_cli_plan_to_stdout(fixtures, capsysbinary):
    rc = main(["plan", "--snapshot", str(fixtures / "snapshot.json"), "--config", str(fixtures / "config.json"),
               "--now", str(NOW)])
    assert rc == 0
    doc = json.loads(capsysbinary.readouterr().out)
    assert doc["schedule"] == {"waves": [["web.clicks", "sales.orders"]]}


def test_empty_snapshot_gives_empty_plan(fixtures, tmp_path):
    snap = tmp_path / "empty.json"
    snap.write_text('{"format_version": 1, "captured_at": 0, "databases": []}')
    out = tmp_path / "plan.json"
    assert main(["plan", "--snapshot", str(snap), "--config", str(fixtures / "config.json"), "--now", "0",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["plan"]["tasks"] == [] and doc["schedule"] == {"waves": []}


def test_malformed_snapshot_exit_1(fixtures, tmp_path, capsys):
    snap = tmp_path / "bad.json"
    snap.write_text('{"format_version": 1,\n "databases": [}')
    rc = main(["plan", "--snapshot", str(snap), "--config", str(fixtures / "config.json"), "--now", "0"])
    assert rc == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_file_and_bad_args_exit_1(fixtures, tmp_path, capsys):
    assert main(["plan", "--snapshot", str(tmp_path / "nope.json"), "--config", str(fixtures / "config.json"),
                 "--now", "0"]) == 1
    assert main(["plan", "--snapshot", "x"]) == 1
    assert main(["frobnicate"]) == 1


def test_internal_error_exit_2(fixtures, monkeypatch, capsys):
    import lakecompact.cli as cli

    def boom(*a, **kw):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "run_pipeline", boom)
    rc = main(["plan", "--snapshot", str(fixtures / "snapshot.json"), "--config", str(fixtures / "config.json"),
               "--now", "0"])
    assert rc == 2
    assert "kaput" in capsys.readouterr().err


def explain_json(fixtures, capsysbinary, cid):
    rc = main(["explain", "--snapshot", str(fixtures / "snapshot.json"), "--config", str(fixtures / "config.json"),
               "--candidate", cid, "--now", str(NOW), "--json"])
    assert rc == 0
    return json.loads(capsysbinary.readouterr().out)


def test_explain_selected_contributions_sum_to_score(fixtures, capsysbinary):
    info = explain_json(fixtures, capsysbinary, "web.clicks")
    assert info["selection"] == {"status": "selected", "priority": 0}
    assert sum(t["contribution"] for t in info["contributions"]) == pytest.approx(info["score"], abs=1e-12)


def test_explain_filtered_shows_rule(fixtures, capsysbinary):
    info = explain_json(fixtures, capsysbinary, "sales.fresh")
    assert info["filter"]["kept"] is False and info["filter"]["rule"] == "recent_creation"
    assert info["selection"]["status"] == "filtered"


def test_explain_budget_exclusion(fixtures, capsysbinary):
    info = explain_json(fixtures, capsysbinary, "sales.events")
    assert info["selection"]["reason"] == "budget_exceeded"
    assert info["selection"]["remaining_budget_gbhr"] == pytest.approx(0.05 - gbhr(384), abs=1e-15)


def test_explain_text_is_deterministic(fixtures, capsys):
    args = ["explain", "--snapshot", str(fixtures / "snapshot.json"), "--config", str(fixtures / "config.json"),
            "--candidate", "sales.events", "--now", str(NOW)]
    main(args)
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first
    assert "budget_exceeded" in first and "remaining budget" in first


def test_explain_unknown_candidate(fixtures, capsys):
    rc = main(["explain", "--snapshot", str(fixtures / "snapshot.json"), "--config", str(fixtures / "config.json"),
               "--candidate", "no.such"])
    assert rc == 1
    with pytest.raises(UnknownCandidate):
        explain_candidate(run_pipeline(load_snapshot(fixtures / "snapshot.json"), fixture_engine(), NOW), "no.such")
