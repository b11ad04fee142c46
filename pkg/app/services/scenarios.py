# app/services/scenarios.py
import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from app.config import get_settings
from app.core.exceptions import ConfigError
from app.schemas.training import AgentHyper, ScenarioConfig, StageConfig

logger = logging.getLogger(__name__)

FULL_AGENTS = 60
FULL_ESTIMATOR_TRIALS = 1_000_000
DESK_AGENTS = 10
DESK_ESTIMATOR_TRIALS = 100_000
DESK_TRIAL_SCALE = 0.2  # 10^4 -> 2.10^3 tentativas

# Hiperparâmetros por cenário (beta = 2 e tau = 30 em todos)
HYPER_DEPHASING = AgentHyper(eta=0.05, gamma=0.01, delta=0.01)
HYPER_SYMMETRIC = AgentHyper(eta=0.01, gamma=0.01, delta=0.01)
HYPER_SLOW_FORGET = AgentHyper(eta=0.05, gamma=0.0006, delta=0.001)
HYPER_STRICT = AgentHyper(eta=0.05, gamma=0.0005, delta=0.001)


def _dephasing() -> ScenarioConfig:
    return ScenarioConfig(
        name="dephasing",
        description="Defasagem p=0.1, limiar 0.001",
        stages=[StageConfig(profile="dephasing-0.1", trials=10_000, estimator_trials=FULL_ESTIMATOR_TRIALS)],
        n_agents=FULL_AGENTS,
        hyper=HYPER_DEPHASING,
    )


def _symmetric() -> ScenarioConfig:
    return ScenarioConfig(
        name="symmetric",
        description="Erros X e Z independentes com p=0.09",
        stages=[StageConfig(profile="symmetric-0.09", trials=10_000, estimator_trials=FULL_ESTIMATOR_TRIALS)],
        n_agents=FULL_AGENTS,
        hyper=HYPER_SYMMETRIC,
    )


def _defect_pair() -> ScenarioConfig:
    return ScenarioConfig(
        name="defect-pair",
        description="Duas plaquetas vizinhas defeituosas (faces 4 e 5)",
        stages=[StageConfig(profile="defect-pair", trials=10_000, estimator_trials=FULL_ESTIMATOR_TRIALS)],
        n_agents=FULL_AGENTS,
        hyper=HYPER_SLOW_FORGET,
    )


def _threshold_quarter() -> ScenarioConfig:
    return ScenarioConfig(
        name="threshold-quarter",
        description="Limiar reduzido de 0.001 para 0.00025 na tentativa 6000",
        stages=[
            StageConfig(profile="dephasing-0.1", threshold=0.001, trials=6_000,
                        estimator_trials=FULL_ESTIMATOR_TRIALS, hyper=HYPER_DEPHASING),
            StageConfig(profile="dephasing-0.1", threshold=0.00025, trials=4_000,
                        estimator_trials=4 * FULL_ESTIMATOR_TRIALS, hyper=HYPER_STRICT),
        ],
        n_agents=FULL_AGENTS,
        hyper=HYPER_DEPHASING,
    )


def _rate_increase() -> ScenarioConfig:
    return ScenarioConfig(
        name="rate-increase",
        description="Defasagem 0.14 e depois 0.16 a partir da tentativa 4000",
        stages=[
            StageConfig(profile="dephasing-0.14", trials=4_000, estimator_trials=FULL_ESTIMATOR_TRIALS),
            StageConfig(profile="dephasing-0.16", trials=4_000, estimator_trials=FULL_ESTIMATOR_TRIALS),
        ],
        n_agents=FULL_AGENTS,
        hyper=HYPER_SLOW_FORGET,
        cold_start_baseline=True,
    )


def _transfer(name: str, profile: str, description: str) -> Callable[[], ScenarioConfig]:
    def build() -> ScenarioConfig:
        return ScenarioConfig(
            name=name,
            description=description,
            stages=[
                StageConfig(profile="dephasing-0.1", trials=6_000,
                            estimator_trials=FULL_ESTIMATOR_TRIALS, hyper=HYPER_DEPHASING),
                # Segunda fase com menos de 10% das tentativas da primeira
                StageConfig(profile=profile, trials=500,
                            estimator_trials=FULL_ESTIMATOR_TRIALS, hyper=HYPER_SLOW_FORGET),
            ],
            n_agents=FULL_AGENTS,
            hyper=HYPER_DEPHASING,
            transfer=True,
            cold_start_baseline=True,
        )
    return build


SCENARIOS: Dict[str, Callable[[], ScenarioConfig]] = {
    "dephasing": _dephasing,
    "symmetric": _symmetric,
    "defect-pair": _defect_pair,
    "threshold-quarter": _threshold_quarter,
    "rate-increase": _rate_increase,
    "transfer-defect": _transfer(
        "transfer-defect", "transfer-defect",
        "Pré-treino em defasagem, transferência para X+Z com plaqueta ruidosa",
    ),
    "transfer-biased": _transfer(
        "transfer-biased", "transfer-biased",
        "Pré-treino em defasagem, transferência para X+Z com p_X dobrado",
    ),
}


def list_scenarios() -> List[str]:
    return sorted(SCENARIOS)


def desk_scale(cfg: ScenarioConfig, n_agents: Optional[int] = None) -> ScenarioConfig:
    """
    Versão de bancada: menos agentes, 10^5 amostras por estimativa e 20% das
    tentativas de cada fase. Estimativas de 4.10^6 viram 4.10^5.
    """
    stages = []
    for stage in cfg.stages:
        estimator = stage.estimator_trials or FULL_ESTIMATOR_TRIALS
        stages.append(stage.model_copy(update={
            "trials": max(1, int(round(stage.trials * DESK_TRIAL_SCALE))) if stage.trials > 500 else stage.trials,
            "estimator_trials": max(1, estimator * DESK_ESTIMATOR_TRIALS // FULL_ESTIMATOR_TRIALS),
        }))
    return cfg.model_copy(update={"stages": stages, "n_agents": DESK_AGENTS if n_agents is None else n_agents})


def load_scenario_file(path: str) -> ScenarioConfig:
    """
    Lê um cenário em JSON

    Raises:
        ConfigError: arquivo ausente, JSON inválido ou campos inválidos
    """
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"Arquivo de cenário não encontrado: {path}")
    try:
        return ScenarioConfig.model_validate_json(file_path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigError(f"Cenário inválido em {path}: {e}") from e


def get_scenario(name_or_path: str) -> ScenarioConfig:
    """
    Resolve um cenário pelo nome da biblioteca, por um arquivo JSON, ou pelo
    arquivo extra apontado em QECFORGE_SCENARIO_FILE (lista de cenários).

    Raises:
        ConfigError: cenário desconhecido
    """
    if name_or_path in SCENARIOS:
        return SCENARIOS[name_or_path]()
    if name_or_path.endswith(".json"):
        return load_scenario_file(name_or_path)

    extra = get_settings().scenario_file
    if extra and Path(extra).exists():
        try:
            entries = json.loads(Path(extra).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Arquivo de cenários inválido: {extra}: {e}") from e
        for entry in entries:
            if entry.get("name") == name_or_path:
                try:
                    return ScenarioConfig.model_validate(entry)
                except ValidationError as e:
                    raise ConfigError(f"Cenário '{name_or_path}' inválido: {e}") from e

    raise ConfigError(f"Cenário desconhecido: '{name_or_path}'. Disponíveis: {', '.join(list_scenarios())}")
