import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from platoon_fdi.config import ConfigError, ScenarioConfig, load_config, parse_config, serialize_config
from platoon_fdi.presets import get_preset, paper_presets, variant_presets


@pytest.mark.parametrize("cfg", paper_presets() + variant_presets(), ids=lambda c: c.name)
def test_presets_round_trip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg


@settings(max_examples=30)
@given(st.floats(1e-4, 1.0), st.integers(1, 6), st.sampled_from(["exact", "boundary"]), st.floats(0, 100))
def test_round_trip_properties(eps, N, mode, t_start):
    cfg = ScenarioConfig().with_values({"controller.sgn_eps": eps, "graph.N": N, "graph.k": 1,
                                        "controller.sgn_mode": mode, "attacker.t_start": t_start})
    assert parse_config(serialize_config(cfg)) == cfg


def test_minimal_preset_expansion():
    cfg = parse_config("preset: scenario1\n")
    assert cfg == get_preset("scenario1")
    cfg = parse_config("preset: scenario1\nattacker:\n  t_start: 10\n")
    assert cfg.attacker.t_start == 10.0 and cfg.attacker.plan == "t1"


def test_negative_step_message():
    with pytest.raises(ConfigError, match="step must be positive") as info:
        parse_config("sim:\n  h: -1\n")
    assert info.value.line == 2 and info.value.path == "sim.h"


def test_unknown_key_has_position_and_hint():
    with pytest.raises(ConfigError) as info:
        parse_config("graph:\n  N: 4\n  kk: 2\n")
    err = info.value
    assert (err.line, err.column) == (3, 3)
    assert "valid keys" in err.hint and "line 3, column 3" in str(err)
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("grpah:\n  N: 4\n")


def test_semantic_errors_have_hints():
    with pytest.raises(ConfigError) as info:
        parse_config("graph:\n  N: 4\n  k: 7\n")
    assert "1 <= k <= 4" in info.value.hint
    with pytest.raises(ConfigError, match="static controller"):
        parse_config("attacker:\n  plan: t4\n")
    with pytest.raises(ConfigError, match="c3"):
        parse_config("controller:\n  kind: static\nattacker:\n  plan: t5\n")
    with pytest.raises(ConfigError, match="whole number of steps"):
        parse_config("sim:\n  h: 0.0003\n")
    with pytest.raises(ConfigError, match="unknown preset"):
        parse_config("preset: scenario9\n")


def test_yaml_syntax_error_position():
    with pytest.raises(ConfigError) as info:
        parse_config("graph:\n  N: [4\n")
    assert info.value.line is not None


def test_numeric_strings_accepted():
    cfg = parse_config("controller:\n  sgn_eps: '1e-3'\nsim:\n  h: 1e-4\n")
    assert cfg.controller.sgn_eps == 1e-3 and cfg.sim.h == 1e-4
    with pytest.raises(ConfigError, match="expected a number"):
        parse_config("sim:\n  h: fast\n")


def test_with_value_and_load(tmp_path):
    cfg = get_preset("scenario0").with_value("gains.K", [-1, -2, -0.5])
    assert cfg.gains.K == [-1.0, -2.0, -0.5]
    with pytest.raises(ConfigError):
        cfg.with_value("gains.nope", 1)
    p = tmp_path / "c.yaml"
    p.write_text(serialize_config(cfg))
    assert load_config(p) == cfg
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")


def test_to_dict_is_plain():
    d = get_preset("scenario4b").to_dict()
    assert d["attacker"]["c3"] == 2.0 and isinstance(d["gains"]["K"], list)
    assert dataclasses.is_dataclass(get_preset("scenario4b").attacker)
