# tests/test_scenarios.py
import json

import pytest

from app.core.exceptions import ConfigError
from app.core.noise import get_profile
from app.services.environment import stage_profile
from app.services.scenarios import (
    DESK_AGENTS,
    desk_scale,
    get_scenario,
    list_scenarios,
    load_scenario_file,
)


def test_library_scenarios_are_valid():
    for name in list_scenarios():
        cfg = get_scenario(name)
        assert cfg.name == name
        for stage in cfg.stages:
            # Perfis referenciados existem na biblioteca
            get_profile(stage.profile)


def test_threshold_quarter_stages():
    cfg = get_scenario("threshold-quarter")
    assert [s.trials for s in cfg.stages] == [6000, 4000]
    assert [s.threshold for s in cfg.stages] == [0.001, 0.00025]
    assert cfg.stages[1].estimator_trials == 4_000_000


def test_transfer_scenarios():
    for name in ("transfer-defect", "transfer-biased"):
        cfg = get_scenario(name)
        assert cfg.transfer and cfg.cold_start_baseline
        assert cfg.stages[1].trials == 500
        assert stage_profile(cfg.stages[1]).base_pz == 0.14


def test_desk_scale():
    cfg = desk_scale(get_scenario("dephasing"))
    assert cfg.n_agents == DESK_AGENTS
    assert cfg.stages[0].trials == 2000
    assert cfg.stages[0].estimator_trials == 100_000

    transfer = desk_scale(get_scenario("transfer-defect"), n_agents=4)
    assert transfer.n_agents == 4
    assert [s.trials for s in transfer.stages] == [1200, 500]


def test_scenario_file(tmp_path):
    path = tmp_path / "mine.json"
    path.write_text(json.dumps({"name": "mine", "stages": [{"profile": "noiseless", "trials": 5}]}), encoding="utf-8")
    assert load_scenario_file(str(path)).stages[0].trials == 5
    assert get_scenario(str(path)).name == "mine"


def test_extra_scenario_list(tmp_path, monkeypatch):
    from app.config import get_settings
    path = tmp_path / "extra.json"
    path.write_text(json.dumps([{"name": "extra", "stages": [{"profile": "noiseless", "trials": 1}]}]), encoding="utf-8")
    monkeypatch.setenv("QECFORGE_SCENARIO_FILE", str(path))
    get_settings.cache_clear()
    assert get_scenario("extra").stages[0].trials == 1


def test_bad_scenarios(tmp_path):
    with pytest.raises(ConfigError):
        get_scenario("nao-existe")
    with pytest.raises(ConfigError):
        load_scenario_file(str(tmp_path / "ausente.json"))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "bad", "stages": []}), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_scenario_file(str(bad))
