# app/services/environment.py
import concurrent.futures
from concurrent.futures.process import BrokenProcessPool
import logging
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from app.config import get_settings
from app.core.estimation import estimate_logical_rate
from app.core.exceptions import ConfigError
from app.core.noise import get_profile
from app.core.topology import apply_action, build_torus_grid, canonical_percept, enumerate_actions
from app.models.lattice import CodeLattice
from app.schemas.noise import NoiseProfile
from app.schemas.training import NetworkSnapshot, ScenarioConfig, StageConfig, StepTrace, TrialRecord
from app.services.agent import ClipNetwork

logger = logging.getLogger(__name__)

MAIN_ARM = "main"
COLD_START_ARM = "cold_start"


class ExperimentResult(BaseModel):
    """Saída de run_experiment: registros, curva e redes finais"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scenario: ScenarioConfig
    records: List[TrialRecord]
    curve: pd.DataFrame
    snapshots: Dict[str, List[NetworkSnapshot]] = {}
    wall_time: float = 0.0

    def arm_records(self, arm: str = MAIN_ARM) -> List[TrialRecord]:
        return [r for r in self.records if r.arm == arm]


def stage_profile(stage: StageConfig) -> NoiseProfile:
    if isinstance(stage.profile, NoiseProfile):
        return stage.profile
    return get_profile(stage.profile)


def run_trial(
        cfg: ScenarioConfig,
        net: ClipNetwork,
        rng: np.random.Generator,
        trial: int = 0,
        stage_index: int = 0,
        agent: int = 0,
        root: Optional[CodeLattice] = None,
        estimator_threads: Optional[int] = None,
) -> TrialRecord:
    """
    Uma tentativa completa a partir do reticulado raiz.

    A cada passo P_L é reestimada; abaixo do limiar a tentativa termina com
    recompensa 1; ao atingir o orçamento de qubits termina sem recompensa;
    caso contrário o agente escolhe e aplica uma ação.
    """
    settings = get_settings()
    stage = cfg.stages[stage_index]
    profile = stage_profile(stage)
    estimator_trials = stage.estimator_trials or settings.estimator_trials
    lat = root or build_torus_grid(cfg.rows, cfg.cols)

    steps: List[StepTrace] = []
    rewarded = terminal = False
    while True:
        seed = int(rng.integers(0, 2 ** 32))
        p_l = estimate_logical_rate(lat, profile, trials=estimator_trials, seed=seed, threads=estimator_threads).p_hat
        percept = canonical_percept(lat)

        if p_l < stage.threshold:
            net.update(1.0)
            net.end_trial(True, trial)
            rewarded = True
            break
        if lat.qubits_added >= cfg.qubit_budget:
            net.update(0.0)
            net.end_trial(False, trial)
            break
        actions = enumerate_actions(lat)
        if not actions:
            logger.warning(f"Tentativa {trial}: percepto {percept.digest[:8]} sem ações legais")
            net.update(0.0)
            net.end_trial(False, trial)
            terminal = True
            break

        i = net.perceive(percept, actions, trial)
        j = net.select_action(i, rng)
        action = net.action_of(i, j)
        steps.append(StepTrace(digest=percept.digest, p_l=p_l, action=action.key()))
        lat = apply_action(lat, action)
        net.update(0.0)

    steps.append(StepTrace(digest=percept.digest, p_l=p_l))
    return TrialRecord(
        trial=trial,
        stage=stage_index,
        agent=agent,
        qubits_added=lat.qubits_added,
        rewarded=rewarded,
        terminal=terminal,
        final_pl=p_l,
        steps=steps,
        # Só códigos recompensados são guardados, sem as estruturas derivadas
        final_lattice=CodeLattice.model_construct(**lat.model_dump()) if rewarded else None,
    )


def _stage_rng(cfg: ScenarioConfig, stage_index: int, arm_id: int, agent: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(stage_index, arm_id, agent))
    return np.random.default_rng(seq)


def _run_agent_stage(
        cfg: ScenarioConfig,
        stage_index: int,
        agent: int,
        arm: str,
        snapshot: Optional[NetworkSnapshot],
        trial_offset: int,
        estimator_threads: Optional[int] = None,
) -> Tuple[List[TrialRecord], NetworkSnapshot]:
    """Executa uma fase inteira para um agente (unidade de trabalho do pool)"""
    stage = cfg.stages[stage_index]
    hyper = stage.hyper or cfg.hyper
    if snapshot is None:
        net = ClipNetwork(hyper)
    else:
        net = ClipNetwork.from_snapshot(snapshot, hyper=hyper)
    rng = _stage_rng(cfg, stage_index, 0 if arm == MAIN_ARM else 1, agent)
    root = build_torus_grid(cfg.rows, cfg.cols)

    records = []
    for t in range(stage.trials):
        record = run_trial(cfg, net, rng, trial=trial_offset + t, stage_index=stage_index, agent=agent, root=root,
                           estimator_threads=estimator_threads)
        record.arm = arm
        records.append(record)
    rewarded = sum(r.rewarded for r in records)
    logger.info(
        f"Agente {agent} [{arm}] fase {stage_index}: {rewarded}/{len(records)} recompensadas, "
        f"{net.n_percepts} perceptos"
    )
    return records, net.snapshot()


def _run_stage(
        cfg: ScenarioConfig,
        stage_index: int,
        arm: str,
        snapshots: List[Optional[NetworkSnapshot]],
        trial_offset: int,
        threads: int,
) -> Tuple[List[TrialRecord], List[NetworkSnapshot]]:
    parallel = threads > 1 and cfg.n_agents > 1
    # Dentro do pool de agentes o estimador roda em série
    jobs = [
        (cfg, stage_index, a, arm, snapshots[a], trial_offset, 1 if parallel else None)
        for a in range(cfg.n_agents)
    ]
    if parallel:
        try:
            with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as executor:
                results = list(executor.map(_run_agent_stage, *zip(*jobs)))
        except (OSError, BrokenProcessPool) as e:
            logger.warning(f"Pool de processos indisponível ({e}); executando agentes em série")
            results = [_run_agent_stage(*job) for job in jobs]
    else:
        results = [_run_agent_stage(*job) for job in jobs]

    records = [r for agent_records, _ in results for r in agent_records]
    return records, [snap for _, snap in results]


def rank_agents(records: Sequence[TrialRecord], last_n: int = 100) -> List[int]:
    """Agentes ordenados do melhor para o pior nas últimas tentativas"""
    frame = records_frame(records)
    if frame.empty:
        return []
    cutoff = frame["trial"].max() - last_n
    recent = frame[frame["trial"] > cutoff]
    summary = recent.groupby("agent").agg(reward_rate=("rewarded", "mean"), mean_qubits=("qubits_added", "mean"))
    summary = summary.sort_values(["reward_rate", "mean_qubits"], ascending=[False, True], kind="mergesort")
    return [int(a) for a in summary.index]


def _pick_transfer_source(records: Sequence[TrialRecord], n_agents: int, rng: np.random.Generator) -> int:
    ranking = rank_agents(records)
    top = ranking[: max(1, n_agents // 4)]
    return int(rng.choice(top))


def run_experiment(
        cfg: ScenarioConfig,
        pretrained: Optional[NetworkSnapshot] = None,
        threads: Optional[int] = None,
) -> ExperimentResult:
    """
    Executa o conjunto de agentes por todas as fases do cenário.

    Sem transferência, cada agente segue com a própria rede entre fases. Com
    transferência, um dos melhores agentes da fase anterior (sorteado no
    quartil superior) é clonado para todos. Uma rede pré-treinada pula a
    primeira fase.
    """
    started = time.time()
    settings = get_settings()
    threads = threads or settings.threads
    if pretrained is not None and len(cfg.stages) < 2:
        raise ConfigError("Rede pré-treinada exige cenário com pelo menos duas fases")

    snapshots: List[Optional[NetworkSnapshot]] = [None] * cfg.n_agents
    first_stage = 0
    trial_offset = 0
    if pretrained is not None:
        snapshots = [pretrained] * cfg.n_agents
        first_stage = 1
        trial_offset = cfg.stages[0].trials
        logger.info("Rede pré-treinada carregada; primeira fase ignorada")

    records: List[TrialRecord] = []
    stage_records: List[TrialRecord] = []
    for stage_index in range(first_stage, len(cfg.stages)):
        if stage_index > first_stage and cfg.transfer:
            rng = _stage_rng(cfg, stage_index, 2, 0)
            source = _pick_transfer_source(stage_records, cfg.n_agents, rng)
            logger.info(f"Transferência: agente {source} clonado para a fase {stage_index}")
            snapshots = [snapshots[source]] * cfg.n_agents
        logger.info(f"Fase {stage_index} ({cfg.stages[stage_index].trials} tentativas, {cfg.n_agents} agentes)")
        stage_records, snapshots = _run_stage(cfg, stage_index, MAIN_ARM, snapshots, trial_offset, threads)
        records += stage_records
        trial_offset += cfg.stages[stage_index].trials

    result_snapshots = {MAIN_ARM: snapshots}
    if cfg.cold_start_baseline:
        last = len(cfg.stages) - 1
        offset = sum(stage.trials for stage in cfg.stages[:last])
        logger.info("Conjunto de controle sem pré-treino na última fase")
        cold_records, cold_snapshots = _run_stage(cfg, last, COLD_START_ARM, [None] * cfg.n_agents, offset, threads)
        records += cold_records
        result_snapshots[COLD_START_ARM] = cold_snapshots

    return ExperimentResult(
        scenario=cfg,
        records=records,
        curve=learning_curve(records),
        snapshots=result_snapshots,
        wall_time=time.time() - started,
    )


# ---------------------------------------------------------------------------
# Agregação
# ---------------------------------------------------------------------------

def records_frame(records: Sequence[TrialRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "arm": r.arm,
                "agent": r.agent,
                "stage": r.stage,
                "trial": r.trial,
                "qubits_added": r.qubits_added,
                "rewarded": r.rewarded,
                "terminal": r.terminal,
                "final_pl": r.final_pl,
            }
            for r in records
        ],
        columns=["arm", "agent", "stage", "trial", "qubits_added", "rewarded", "terminal", "final_pl"],
    )


def learning_curve(records: Sequence[TrialRecord]) -> pd.DataFrame:
    """Média e desvio padrão por tentativa sobre o conjunto de agentes"""
    frame = records_frame(records)
    frame["qubits_rewarded"] = frame["qubits_added"].where(frame["rewarded"])
    curve = (
        frame.groupby(["arm", "trial"])
        .agg(
            mean_qubits=("qubits_added", "mean"),
            std_qubits=("qubits_added", lambda s: float(s.std(ddof=0))),
            reward_rate=("rewarded", "mean"),
            mean_final_PL=("final_pl", "mean"),
            mean_qubits_rewarded=("qubits_rewarded", "mean"),
        )
        .reset_index()
        .rename(columns={"trial": "trial_index"})
    )
    return curve[["arm", "trial_index", "mean_qubits", "std_qubits", "reward_rate", "mean_final_PL", "mean_qubits_rewarded"]]


def x_stabilizer_fraction(records: Sequence[TrialRecord]) -> float:
    """Fração das ações em sequências recompensadas que acrescentam um estabilizador X"""
    actions = [a for r in records if r.rewarded for a in r.action_sequence()]
    if not actions:
        return 0.0
    return sum(1 for a in actions if a[0] == 0) / len(actions)


def stabilizer_ratio(records: Sequence[TrialRecord]) -> float:
    """Razão média #X / #Z dos códigos finais recompensados"""
    ratios = []
    for r in records:
        if r.rewarded and r.final_lattice is not None:
            n_x, n_z = r.final_lattice.stabilizer_counts()
            ratios.append(n_x / n_z)
    return float(np.mean(ratios)) if ratios else 0.0


def best_rewarded(records: Sequence[TrialRecord], limit: int = 5) -> List[TrialRecord]:
    """Registros recompensados com menos qubits, um por sequência de ações"""
    seen = set()
    best = []
    for r in sorted((r for r in records if r.rewarded), key=lambda r: (r.qubits_added, r.final_pl, r.agent, r.trial)):
        key = tuple(r.action_sequence())
        if key in seen:
            continue
        seen.add(key)
        best.append(r)
        if len(best) >= limit:
            break
    return best
