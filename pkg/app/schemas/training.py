# app/schemas/training.py
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, Field, model_validator

from app.config import DEFAULT_REWARD_THRESHOLD, QUBIT_BUDGET
from app.models.lattice import CodeLattice
from app.schemas.noise import NoiseProfile

ActionKey = Tuple[int, int, int, int]


class AgentHyper(BaseModel):
    """Hiperparâmetros do agente PS"""
    beta: float = Field(2.0, gt=0.0)
    eta: float = Field(0.05, ge=0.0, le=1.0)  # decaimento do glow
    gamma: float = Field(0.01, ge=0.0, le=1.0)  # esquecimento
    delta: float = Field(0.01, ge=0.0)  # margem de deleção
    tau: int = Field(30, ge=0)  # tempo de imunidade


class StageConfig(BaseModel):
    """Uma fase de treino: perfil de ruído, limiar e orçamento de tentativas"""
    profile: Union[str, NoiseProfile]
    threshold: float = Field(DEFAULT_REWARD_THRESHOLD, ge=0.0, le=1.0)
    trials: int = Field(..., gt=0)
    estimator_trials: Optional[int] = Field(None, gt=0)
    hyper: Optional[AgentHyper] = None


class ScenarioConfig(BaseModel):
    """Experimento completo de aprendizado"""
    name: str
    description: Optional[str] = None
    rows: int = Field(3, ge=3)
    cols: int = Field(3, ge=3)
    stages: List[StageConfig] = Field(..., min_length=1)
    qubit_budget: int = Field(QUBIT_BUDGET, ge=1)
    n_agents: int = Field(10, ge=1)
    seed: int = 0
    hyper: AgentHyper = AgentHyper()
    # Na troca de fase, clona um dos melhores agentes para todo o conjunto
    transfer: bool = False
    # Roda também um conjunto sem pré-treino na última fase
    cold_start_baseline: bool = False

    @model_validator(mode="after")
    def check_transfer(self):
        if (self.transfer or self.cold_start_baseline) and len(self.stages) < 2:
            raise ValueError("transfer/cold_start_baseline exigem pelo menos duas fases")
        return self

    @property
    def total_trials(self) -> int:
        return sum(stage.trials for stage in self.stages)


class StepTrace(BaseModel):
    """Um passo: percepto visto, estimativa de P_L e ação tomada"""
    digest: str
    p_l: float
    action: Optional[ActionKey] = None


class TrialRecord(BaseModel):
    """Resultado de uma tentativa de um agente"""
    trial: int
    stage: int = 0
    agent: int = 0
    arm: str = "main"  # "main" ou "cold_start"
    qubits_added: int
    rewarded: bool
    terminal: bool = False  # terminou sem ações legais
    final_pl: float
    steps: List[StepTrace] = []
    final_lattice: Optional[CodeLattice] = Field(None, exclude=True)

    def action_sequence(self) -> List[ActionKey]:
        return [step.action for step in self.steps if step.action is not None]


class ClipSnapshot(BaseModel):
    digest: str
    actions: List[ActionKey]
    h: List[float]
    g: List[float]
    created_trial: int = 0
    rewarded_count: int = 0


class NetworkSnapshot(BaseModel):
    """Estado completo da rede de clips (para retomar ou transferir)"""
    hyper: AgentHyper
    m0: Optional[int] = None
    root_digest: Optional[str] = None
    clips: List[ClipSnapshot] = []
