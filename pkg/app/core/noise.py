# app/core/noise.py
import logging
from functools import cached_property
from typing import Dict, FrozenSet, List, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.core.exceptions import ConfigError, ProfileResolutionError
from app.models.lattice import CodeLattice
from app.schemas.noise import NoiseOverride, NoiseProfile, NoiseTarget

logger = logging.getLogger(__name__)


class ResolvedNoise(BaseModel):
    """Tabela (p_X,k, p_Z,k) por aresta, na ordem dos ids de aresta"""
    model_config = ConfigDict(frozen=True)

    profile_id: str
    px: Tuple[float, ...]
    pz: Tuple[float, ...]

    @property
    def n_qubits(self) -> int:
        return len(self.px)

    @cached_property
    def px_array(self) -> np.ndarray:
        return np.asarray(self.px, dtype=float)

    @cached_property
    def pz_array(self) -> np.ndarray:
        return np.asarray(self.pz, dtype=float)

    def is_noiseless(self) -> bool:
        return not any(self.px) and not any(self.pz)


class ErasureSample(BaseModel):
    """Uma realização do canal de apagamento nos dois setores"""
    model_config = ConfigDict(frozen=True)

    erased_x: FrozenSet[int]
    erased_z: FrozenSet[int]
    realized_x: FrozenSet[int]
    realized_z: FrozenSet[int]


def _select_edges(target: NoiseTarget, lat: CodeLattice) -> Set[int]:
    def face(label: int) -> Set[int]:
        if label not in lat.boundaries:
            raise ProfileResolutionError(f"Face {label} não existe no reticulado")
        return set(lat.face_edges(label))

    if target.kind == "vertex":
        edges: Set[int] = set()
        for label in target.labels:
            if label not in lat.rotations:
                raise ProfileResolutionError(f"Vértice {label} não existe no reticulado")
            edges |= set(lat.vertex_edges(label))
        return edges
    if target.kind == "edge":
        missing = [e for e in target.labels if e not in lat.edge_darts]
        if missing:
            raise ProfileResolutionError(f"Arestas inexistentes: {missing}")
        return set(target.labels)
    if target.kind == "intersection":
        edges = face(target.labels[0])
        for label in target.labels[1:]:
            edges &= face(label)
        return edges
    # face / union
    edges = set()
    for label in target.labels:
        edges |= face(label)
    return edges


def resolve_profile(profile: NoiseProfile, lat: CodeLattice) -> ResolvedNoise:
    """
    Resolve o perfil contra um reticulado concreto.

    Ajustes são aplicados na ordem do arquivo (cada um soma e depois fixa);
    ao final p_X é limitado a [0, 1] e p_Z a [0, 1 - p_X].

    Raises:
        ProfileResolutionError: seletor aponta para rótulo inexistente
    """
    n = lat.n_edges
    px = np.full(n, profile.base_px, dtype=float)
    pz = np.full(n, profile.base_pz, dtype=float)

    for override in profile.overrides:
        idx = np.fromiter(sorted(_select_edges(override.target, lat)), dtype=int)
        if idx.size == 0:
            logger.warning(f"Seletor '{override.target}' não seleciona nenhuma aresta")
            continue
        if override.add_px is not None:
            px[idx] += override.add_px
        if override.set_px is not None:
            px[idx] = override.set_px
        if override.add_pz is not None:
            pz[idx] += override.add_pz
        if override.set_pz is not None:
            pz[idx] = override.set_pz

    px = np.clip(px, 0.0, 1.0)
    pz = np.clip(pz, 0.0, 1.0 - px)
    return ResolvedNoise(
        profile_id=profile.profile_id(),
        px=tuple(float(v) for v in px),
        pz=tuple(float(v) for v in pz),
    )


def sample_erasure(table: ResolvedNoise, rng: np.random.Generator) -> ErasureSample:
    """
    Sorteia um padrão de apagamento: cada qubit é apagado com probabilidade
    igual à taxa Pauli e, se apagado, sofre o erro com probabilidade 1/2.

    Linhas sorteadas: [apaga X, moeda X, apaga Z, moeda Z], a mesma ordem
    usada pelo estimador em lote.
    """
    draws = rng.random((4, table.n_qubits))
    erased_x = draws[0] < table.px_array
    erased_z = draws[2] < table.pz_array
    realized_x = erased_x & (draws[1] < 0.5)
    realized_z = erased_z & (draws[3] < 0.5)
    return ErasureSample(
        erased_x=frozenset(np.flatnonzero(erased_x).tolist()),
        erased_z=frozenset(np.flatnonzero(erased_z).tolist()),
        realized_x=frozenset(np.flatnonzero(realized_x).tolist()),
        realized_z=frozenset(np.flatnonzero(realized_z).tolist()),
    )


# ---------------------------------------------------------------------------
# Biblioteca de perfis
# ---------------------------------------------------------------------------

def dephasing_profile(p: float) -> NoiseProfile:
    """Canal de defasagem: só erros Z com probabilidade p"""
    return NoiseProfile(name=f"dephasing-{p:g}", base_px=0.0, base_pz=p)


def pauli_profile(px: float, pz: float) -> NoiseProfile:
    return NoiseProfile(name=f"pauli-{px:g}-{pz:g}", base_px=px, base_pz=pz)


def _build_library() -> Dict[str, NoiseProfile]:
    library: Dict[str, NoiseProfile] = {}
    for p in (0.05, 0.1, 0.14, 0.15, 0.16):
        profile = dephasing_profile(p)
        library[profile.name] = profile

    library["symmetric-0.09"] = NoiseProfile(
        name="symmetric-0.09",
        description="X e Z independentes com a mesma taxa",
        base_px=0.09,
        base_pz=0.09,
    )
    # Duas plaquetas vizinhas defeituosas; faces 4 e 5 do 3x3 por escolha livre
    library["defect-pair"] = NoiseProfile(
        name="defect-pair",
        description="Plaquetas 4 e 5 com X extra; qubit compartilhado sempre falha",
        base_px=0.02,
        base_pz=0.1,
        overrides=[
            NoiseOverride(target="face 4", add_px=0.5),
            NoiseOverride(target="face 5", add_px=0.5),
            NoiseOverride(target="intersection 4 5", set_px=1.0),
        ],
    )
    library["transfer-defect"] = NoiseProfile(
        name="transfer-defect",
        description="Defasagem 0.14 com fundo X e uma plaqueta ruidosa",
        base_px=0.02,
        base_pz=0.14,
        overrides=[NoiseOverride(target="face 4", add_px=0.15)],
    )
    library["transfer-biased"] = NoiseProfile(
        name="transfer-biased",
        description="Defasagem 0.14 com fundo X uniforme",
        base_px=0.04,
        base_pz=0.14,
    )
    library["noiseless"] = NoiseProfile(name="noiseless")
    return library


PROFILE_LIBRARY: Dict[str, NoiseProfile] = _build_library()


def list_profiles() -> List[str]:
    return sorted(PROFILE_LIBRARY)


def get_profile(name: str) -> NoiseProfile:
    """
    Busca um perfil da biblioteca pelo nome

    Raises:
        ConfigError: perfil desconhecido
    """
    if name not in PROFILE_LIBRARY:
        raise ConfigError(f"Perfil de ruído desconhecido: '{name}'. Disponíveis: {', '.join(list_profiles())}")
    return PROFILE_LIBRARY[name]
