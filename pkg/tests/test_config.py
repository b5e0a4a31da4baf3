from __future__ import annotations

import json
from pathlib import Path

import pytest

from lakecompact.config import config_from_dict, engine_from_dict, engine_to_dict, load_config
from lakecompact.errors import ConfigError, ParseError
from lakecompact.model import EngineConfig, ScopeStrategy
from lakecompact.scheduler import PeriodicTrigger, PostWriteTrigger
from lakecompact.simulator.scenarios import reference_config

ROOT = Path(__file__).resolve().parents[1]


def test_empty_config_uses_defaults():
    cfg = config_from_dict({})
    assert cfg.engine == EngineConfig()
    assert cfg.trigger == PeriodicTrigger(3600)
    assert cfg.max_parallel == 10 and cfg.simulator is None


def test_engine_roundtrip():
    e = EngineConfig(k=None, budget_gbhr=2.5, scope_strategy=ScopeStrategy.HYBRID)
    assert engine_from_dict(engine_to_dict(e)) == e


@pytest.mark.parametrize(
    "obj,path",
    [
        ({"engine": {"k": "ten"}}, "engine.k"),
        ({"engine": {"weights": {"bogus": 1.0}}}, "engine.weights.bogus"),
        ({"engine": {"filters": ["recent_write", "nope"]}}, "engine.filters[1]"),
        ({"engine": {"scope_strategy": "galaxy"}}, "engine.scope_strategy"),
        ({"engine": {"weights": {"file_count_reduction": 0.2}}}, "engine"),
        ({"engine": {"colour": 1}}, "engine.colour"),
        ({"trigger": {"mode": "sometimes"}}, "trigger.mode"),
        ({"trigger": {"blackout_windows": [[1]]}}, "trigger.blackout_windows[0]"),
        ({"scheduler": {"max_parallel": 0}}, "scheduler.max_parallel"),
        ({"extra": {}}, "extra"),
    ],
)
def test_errors_carry_field_path(obj, path):
    with pytest.raises(ConfigError) as exc:
        config_from_dict(obj)
    assert str(exc.value).startswith(path)


def test_post_write_trigger():
    cfg = config_from_dict({"trigger": {"mode": "post_write", "debounce_seconds": 60}})
    assert cfg.trigger == PostWriteTrigger(60, {"small_file_fraction": 0.10})


def sim_section(**kw):
    sec = {
        "seed": 1,
        "duration_seconds": 600,
        "tables": [{"name": "t", "write_share": 1.0}],
        "patterns": [{"kind": "sinusoidal", "rate": 10}],
    }
    sec.update(kw)
    return sec


def test_zero_duration_rejected():
    with pytest.raises(ConfigError, match="simulator"):
        config_from_dict({"simulator": sim_section(duration_seconds=0)})


def test_bad_pattern_path():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"simulator": sim_section(patterns=[{"kind": "sinusoidal", "rate": -1}])})
    assert str(exc.value).startswith("simulator.patterns[0]")


def test_strategy_overrides_merge_onto_engine():
    cfg = config_from_dict(
        {
            "engine": {"k": 7},
            "simulator": sim_section(strategies=[{"name": "h", "engine": {"scope_strategy": "hybrid"}}]),
        }
    )
    (s,) = cfg.strategies
    assert s.engine.k == 7 and s.engine.scope_strategy is ScopeStrategy.HYBRID


def test_reserved_strategy_name():
    with pytest.raises(ConfigError, match="reserved"):
        config_from_dict({"simulator": sim_section(strategies=[{"name": "none"}])})


def test_malformed_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{")
    with pytest.raises(ParseError):
        load_config(p)


def test_shipped_simulate_config_is_the_reference_scenario():
    cfg = load_config(ROOT / "configs" / "simulate.json")
    assert cfg.simulator == reference_config()
    assert [s.name for s in cfg.strategies] == ["table-10", "hybrid-50", "hybrid-500"]
    assert [s.engine.k for s in cfg.strategies] == [10, 50, 500]


def test_fixture_config_loads(fixtures):
    cfg = load_config(fixtures / "config.json")
    assert cfg.engine.budget_gbhr == 0.05 and cfg.max_parallel == 2
    json.loads((fixtures / "config.json").read_text())
