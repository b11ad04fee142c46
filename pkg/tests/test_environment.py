# tests/test_environment.py
import numpy as np
import pytest
from pydantic import ValidationError

from app.core.topology import canonical_percept
from app.schemas.training import NetworkSnapshot, ScenarioConfig, StageConfig
from app.services.agent import ClipNetwork
from app.services.environment import (
    COLD_START_ARM,
    MAIN_ARM,
    best_rewarded,
    learning_curve,
    rank_agents,
    run_experiment,
    run_trial,
    stabilizer_ratio,
    x_stabilizer_fraction,
)
from app.services.scenarios import desk_scale, get_scenario


def scenario(threshold: float, budget: int = 5, trials: int = 3, agents: int = 2, **kwargs) -> ScenarioConfig:
    stages = kwargs.pop("stages", None) or [
        StageConfig(profile="dephasing-0.1", threshold=threshold, trials=trials, estimator_trials=200)
    ]
    return ScenarioConfig(name="teste", stages=stages, qubit_budget=budget, n_agents=agents, **kwargs)


def test_threshold_one_rewards_immediately(root):
    cfg = scenario(threshold=1.0)
    net = ClipNetwork(cfg.hyper)
    record = run_trial(cfg, net, np.random.default_rng(0))
    assert record.rewarded
    assert record.qubits_added == 0
    assert record.action_sequence() == []
    assert record.final_pl < 1.0
    assert record.steps[0].digest == canonical_percept(root).digest


def test_threshold_zero_exhausts_budget(root):
    cfg = scenario(threshold=0.0, budget=5)
    net = ClipNetwork(cfg.hyper)
    rng = np.random.default_rng(1)
    for t in range(2):
        record = run_trial(cfg, net, rng, trial=t)
        assert not record.rewarded
        assert record.qubits_added == 5
        assert len(record.action_sequence()) == 5
        assert record.steps[0].digest == canonical_percept(root).digest
        assert record.final_lattice is None
    # Tentativas sem recompensa não deixam clips além da raiz
    assert net.n_percepts == 1


def test_rewarded_record_keeps_final_lattice():
    cfg = scenario(threshold=1.0)
    record = run_trial(cfg, ClipNetwork(cfg.hyper), np.random.default_rng(0))
    assert record.final_lattice is not None
    assert record.final_lattice.n_edges == 18


def test_config_validation():
    with pytest.raises(ValidationError):
        scenario(threshold=0.001, agents=0)
    with pytest.raises(ValidationError):
        scenario(threshold=0.001, transfer=True)
    with pytest.raises(ValidationError):
        StageConfig(profile="dephasing-0.1", threshold=1.5, trials=10)


def test_run_experiment_is_reproducible():
    cfg = scenario(threshold=0.0, budget=2, trials=3, agents=2, seed=5)
    a = run_experiment(cfg, threads=1)
    b = run_experiment(cfg, threads=1)
    assert [r.action_sequence() for r in a.records] == [r.action_sequence() for r in b.records]
    assert len(a.records) == 6
    assert all(r.qubits_added == 2 for r in a.records)


def test_learning_curve_columns():
    cfg = scenario(threshold=1.0, trials=4, agents=3)
    result = run_experiment(cfg, threads=1)
    curve = result.curve
    assert list(curve.columns) == [
        "arm", "trial_index", "mean_qubits", "std_qubits", "reward_rate", "mean_final_PL", "mean_qubits_rewarded",
    ]
    assert len(curve) == 4
    assert (curve["reward_rate"] == 1.0).all()
    assert (curve["mean_qubits"] == 0.0).all()
    assert (curve["std_qubits"] == 0.0).all()


def test_two_stages_with_transfer_and_cold_start():
    stages = [
        StageConfig(profile="dephasing-0.1", threshold=1.0, trials=3, estimator_trials=100),
        StageConfig(profile="dephasing-0.14", threshold=1.0, trials=2, estimator_trials=100),
    ]
    cfg = scenario(threshold=1.0, stages=stages, agents=2, transfer=True, cold_start_baseline=True)
    result = run_experiment(cfg, threads=1)
    main = result.arm_records(MAIN_ARM)
    cold = result.arm_records(COLD_START_ARM)
    assert len(main) == 2 * 5
    assert len(cold) == 2 * 2
    assert sorted({r.trial for r in cold}) == [3, 4]
    assert set(result.curve["arm"]) == {MAIN_ARM, COLD_START_ARM}
    assert len(result.snapshots[MAIN_ARM]) == 2


def test_pretrained_skips_first_stage():
    stages = [
        StageConfig(profile="dephasing-0.1", threshold=1.0, trials=3, estimator_trials=100),
        StageConfig(profile="dephasing-0.1", threshold=1.0, trials=2, estimator_trials=100),
    ]
    cfg = scenario(threshold=1.0, stages=stages, agents=2)
    snapshot = NetworkSnapshot(hyper=cfg.hyper)
    result = run_experiment(cfg, pretrained=snapshot, threads=1)
    assert sorted({r.trial for r in result.records}) == [3, 4]
    assert {r.stage for r in result.records} == {1}


def test_aggregations():
    cfg = scenario(threshold=0.0, budget=2, trials=3, agents=2)
    records = run_experiment(cfg, threads=1).records
    assert sorted(rank_agents(records)) == [0, 1]
    # Sem recompensas não há sequências para analisar
    assert best_rewarded(records) == []
    assert x_stabilizer_fraction(records) == 0.0

    curve = learning_curve(records)
    assert (curve["mean_qubits"] == 2.0).all()
    assert curve["mean_qubits_rewarded"].isna().all()


# ---------------------------------------------------------------------------
# Bancada (10 agentes, sementes fixas): horas de execução
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def dephasing_run():
    return run_experiment(desk_scale(get_scenario("dephasing")))


def top_agent_records(records, n=3):
    top = set(rank_agents(records)[:n])
    return [r for r in records if r.agent in top]


@pytest.mark.very_slow
def test_desk_dephasing_converges(dephasing_run):
    curve = dephasing_run.curve
    main = curve[curve["arm"] == MAIN_ARM]
    early = main[main["trial_index"] < 50]["mean_qubits"].mean()
    late = main[main["trial_index"] >= 1800]["mean_qubits"].mean()
    assert 14 <= early <= 26
    assert late < 8
    assert any(r.rewarded and r.qubits_added <= 4 for r in dephasing_run.records)


@pytest.mark.very_slow
def test_desk_dephasing_prefers_x_stabilizers(dephasing_run):
    assert x_stabilizer_fraction(top_agent_records(dephasing_run.records)) >= 0.8


@pytest.mark.very_slow
def test_desk_symmetric_keeps_stabilizers_balanced():
    result = run_experiment(desk_scale(get_scenario("symmetric")))
    ratio = stabilizer_ratio(top_agent_records(result.records))
    assert 0.75 <= ratio <= 1.35


@pytest.mark.very_slow
def test_desk_transfer_beats_cold_start():
    cfg = desk_scale(get_scenario("transfer-defect"))
    result = run_experiment(cfg)
    last_stage = len(cfg.stages) - 1
    main = [r for r in result.arm_records(MAIN_ARM) if r.stage == last_stage]
    cold = result.arm_records(COLD_START_ARM)
    assert len(main) == len(cold) == cfg.n_agents * cfg.stages[-1].trials

    cutoff = max(r.trial for r in main) - 100
    main_qubits = np.mean([r.qubits_added for r in main if r.trial > cutoff])
    cold_qubits = np.mean([r.qubits_added for r in cold if r.trial > cutoff])
    assert main_qubits < cold_qubits

    main_rate = np.mean([r.rewarded for r in main])
    cold_rate = np.mean([r.rewarded for r in cold])
    assert cold_rate < 0.5 * main_rate
