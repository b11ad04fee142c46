# app/services/agent.py
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.config import get_settings
from app.core.exceptions import InvariantViolation, TerminalPerceptError
from app.models.lattice import Action, Percept
from app.schemas.training import AgentHyper, ClipSnapshot, NetworkSnapshot

logger = logging.getLogger(__name__)


class Clip:
    """Clip de percepto com suas arestas para as ações disponíveis"""

    def __init__(self, digest: str, actions: Sequence[Action], created_trial: int):
        self.digest = digest
        self.actions: List[Action] = list(actions)
        self.h = np.ones(len(self.actions))
        self.g = np.zeros(len(self.actions))
        self.created_trial = created_trial
        self.rewarded_count = 0
        self.fresh = True  # criado na tentativa em andamento


class ClipNetwork:
    """
    Rede de clips de duas camadas do agente Projective Simulation.

    Percepts são indexados pelo digest canônico; índices são estáveis e
    nunca reaproveitados depois de uma deleção. O primeiro percepto
    registrado é a raiz: nunca é apagado e define M_0.
    """

    def __init__(self, hyper: Optional[AgentHyper] = None, reset_glow: Optional[bool] = None):
        self.hyper = hyper or AgentHyper()
        self.reset_glow = get_settings().reset_glow if reset_glow is None else reset_glow
        self.clips: Dict[int, Clip] = {}
        self.by_digest: Dict[str, int] = {}
        self.root_index: Optional[int] = None
        self.m0: Optional[int] = None
        self._next_index = 0

    # ------------------------------------------------------------------
    # Consulta
    # ------------------------------------------------------------------

    @property
    def n_percepts(self) -> int:
        return len(self.clips)

    def __contains__(self, digest: str) -> bool:
        return digest in self.by_digest

    def index_of(self, digest: str) -> Optional[int]:
        return self.by_digest.get(digest)

    def clip(self, i: int) -> Clip:
        return self.clips[i]

    def action_of(self, i: int, j: int) -> Action:
        return self.clips[i].actions[j]

    def policy(self, i: int) -> np.ndarray:
        """Softmax p_ij = exp(beta h_ij) / sum_k exp(beta h_ik)"""
        h = self.clips[i].h
        weights = np.exp(self.hyper.beta * (h - h.max()))
        return weights / weights.sum()

    # ------------------------------------------------------------------
    # Interação
    # ------------------------------------------------------------------

    def perceive(self, percept: Percept, available: Sequence[Action], trial: int = 0) -> int:
        """
        Registra (ou reencontra) um percepto e devolve seu índice.

        Raises:
            TerminalPerceptError: percepto sem ações disponíveis
        """
        if not available:
            raise TerminalPerceptError(f"Percepto {percept.digest[:8]} não tem ações legais")
        index = self.by_digest.get(percept.digest)
        if index is not None:
            return index

        index = self._next_index
        self._next_index += 1
        self.clips[index] = Clip(percept.digest, available, trial)
        self.by_digest[percept.digest] = index
        if self.root_index is None:
            self.root_index = index
            self.m0 = len(available)
        logger.debug(f"Novo percepto {index} ({percept.digest[:8]}) com {len(available)} ações")
        return index

    def select_action(self, i: int, rng: np.random.Generator) -> int:
        """Sorteia j pela softmax e marca a aresta com glow M_i / M_0"""
        clip = self.clips[i]
        j = int(rng.choice(len(clip.actions), p=self.policy(i)))
        clip.g[j] = len(clip.actions) / self.m0
        return j

    def update(self, reward: float) -> None:
        """h <- h + lambda g + gamma (1 - h), com piso 1; depois g <- (1 - eta) g"""
        if reward < 0:
            raise InvariantViolation("Recompensa deve ser não negativa")
        gamma, decay = self.hyper.gamma, 1.0 - self.hyper.eta
        for clip in self.clips.values():
            clip.h += reward * clip.g + gamma * (1.0 - clip.h)
            np.maximum(clip.h, 1.0, out=clip.h)
            clip.g *= decay

    def end_trial(self, rewarded: bool, trial: int = 0) -> List[int]:
        """
        Fecha uma tentativa: sem recompensa, remove os clips criados nela;
        com recompensa, conta a interação recompensada em todos. Em seguida
        apaga clips imunes vencidos com h médio abaixo de 1 + delta.

        Returns:
            Índices removidos
        """
        removed: List[int] = []
        if not rewarded:
            removed += [i for i, clip in self.clips.items() if clip.fresh and i != self.root_index]
            for i in removed:
                self._drop(i)
        else:
            for clip in self.clips.values():
                clip.rewarded_count += 1

        stale = [
            i for i, clip in self.clips.items()
            if i != self.root_index
            and clip.rewarded_count > self.hyper.tau
            and clip.h.mean() < 1.0 + self.hyper.delta
        ]
        for i in stale:
            self._drop(i)
        removed += stale

        for clip in self.clips.values():
            clip.fresh = False
            if self.reset_glow:
                clip.g[:] = 0.0
        if removed:
            logger.debug(f"Tentativa {trial}: {len(removed)} clips removidos, {self.n_percepts} restantes")
        return removed

    def _drop(self, i: int) -> None:
        clip = self.clips.pop(i)
        del self.by_digest[clip.digest]

    # ------------------------------------------------------------------
    # Persistência
    # ------------------------------------------------------------------

    def snapshot(self) -> NetworkSnapshot:
        ordered = sorted(self.clips)
        return NetworkSnapshot(
            hyper=self.hyper,
            m0=self.m0,
            root_digest=self.clips[self.root_index].digest if self.root_index is not None else None,
            clips=[
                ClipSnapshot(
                    digest=self.clips[i].digest,
                    actions=[a.key() for a in self.clips[i].actions],
                    h=self.clips[i].h.tolist(),
                    g=self.clips[i].g.tolist(),
                    created_trial=self.clips[i].created_trial,
                    rewarded_count=self.clips[i].rewarded_count,
                )
                for i in ordered
            ],
        )

    @classmethod
    def from_snapshot(cls, snapshot: NetworkSnapshot, hyper: Optional[AgentHyper] = None,
                      reset_glow: Optional[bool] = None) -> "ClipNetwork":
        """Reconstrói a rede; os índices são renumerados na ordem salva"""
        net = cls(hyper or snapshot.hyper, reset_glow=reset_glow)
        for item in snapshot.clips:
            actions = [Action(d=d, v=v, p1=p1, p2=p2) for d, v, p1, p2 in item.actions]
            clip = Clip(item.digest, actions, item.created_trial)
            clip.h = np.asarray(item.h, dtype=float)
            clip.g = np.asarray(item.g, dtype=float)
            clip.rewarded_count = item.rewarded_count
            clip.fresh = False
            index = net._next_index
            net._next_index += 1
            net.clips[index] = clip
            net.by_digest[item.digest] = index
            if item.digest == snapshot.root_digest:
                net.root_index = index
        net.m0 = snapshot.m0
        return net

    def clone(self) -> "ClipNetwork":
        return ClipNetwork.from_snapshot(self.snapshot(), reset_glow=self.reset_glow)
