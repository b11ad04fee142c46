# app/services/explorer.py
import logging
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.config import CENSUS_DEPTH_LIMIT
from app.core.estimation import estimate_logical_rate, estimate_union_find_rate
from app.core.exceptions import ConfigError
from app.core.topology import ErrorType, apply_action, canonical_percept, code_distance, enumerate_actions
from app.models.lattice import Action, CodeLattice
from app.schemas.noise import NoiseProfile
from app.schemas.runs import ExploreNode

logger = logging.getLogger(__name__)


def census(root: CodeLattice, depth: int, allow_deep: bool = False) -> List[int]:
    """
    Contagem C(0..depth) de sequências de ações a partir da raiz, com
    códigos repetidos contados separadamente.

    Raises:
        ConfigError: profundidade negativa ou acima do limite
    """
    if depth < 0:
        raise ConfigError("Profundidade deve ser não negativa")
    if depth > CENSUS_DEPTH_LIMIT and not allow_deep:
        raise ConfigError(f"Censo limitado à profundidade {CENSUS_DEPTH_LIMIT}")

    counts = [0] * (depth + 1)

    def visit(lat: CodeLattice, level: int) -> None:
        counts[level] += 1
        if level == depth:
            return
        actions = enumerate_actions(lat)
        if level + 1 == depth:
            # Último nível: basta contar os filhos
            counts[level + 1] += len(actions)
            return
        for action in actions:
            visit(apply_action(lat, action), level + 1)

    visit(root, 0)
    logger.info(f"Censo até profundidade {depth}: {counts}")
    return counts


def explore(
        root: CodeLattice,
        profile: NoiseProfile,
        p_expl: float,
        radius: int,
        trials_per_node: int,
        seed: int = 0,
        convention: Optional[str] = None,
) -> List[ExploreNode]:
    """
    Exploração aleatória da árvore de códigos: todos os filhos da raiz são
    avaliados; daí em diante cada sucessor entra com probabilidade p_expl.
    """
    if not 0.0 < p_expl <= 1.0:
        raise ConfigError("p_expl deve estar em (0, 1]")
    if radius < 0:
        raise ConfigError("Raio deve ser não negativo")

    rng = np.random.default_rng(seed)
    nodes: List[ExploreNode] = []

    def evaluate(lat: CodeLattice, parent: Optional[int], depth: int, action: Optional[Action]) -> int:
        estimate = estimate_logical_rate(
            lat, profile, trials=trials_per_node, seed=int(rng.integers(0, 2 ** 32)), convention=convention
        )
        node = ExploreNode(
            node_id=len(nodes),
            parent_id=parent,
            depth=depth,
            action=action.key() if action else None,
            n_qubits=lat.n_edges,
            digest=canonical_percept(lat).digest,
            p_l=estimate.p_hat,
            stderr=estimate.stderr,
        )
        nodes.append(node)
        return node.node_id

    frontier: List[Tuple[CodeLattice, int]] = [(root, evaluate(root, None, 0, None))]
    for depth in range(1, radius + 1):
        next_frontier = []
        for lat, node_id in frontier:
            for action in enumerate_actions(lat):
                if depth > 1 and rng.random() >= p_expl:
                    continue
                child = apply_action(lat, action)
                next_frontier.append((child, evaluate(child, node_id, depth, action)))
        frontier = next_frontier
        logger.info(f"Exploração: profundidade {depth}, {len(frontier)} nós novos, {len(nodes)} no total")
        if not frontier:
            break
    return nodes


def explore_frame(nodes: Sequence[ExploreNode]) -> pd.DataFrame:
    frame = pd.DataFrame([n.model_dump() for n in nodes])
    if not frame.empty:
        frame["action"] = frame["action"].map(lambda a: "" if a is None else " ".join(str(x) for x in a))
    return frame


def action_sequences(root: CodeLattice, depth: int, kind: Optional[int] = None) -> Iterator[Tuple[List[Action], CodeLattice]]:
    """Percorre em profundidade as sequências de ações (opcionalmente de um só tipo)"""
    def visit(lat: CodeLattice, path: List[Action]):
        yield path, lat
        if len(path) == depth:
            return
        for action in enumerate_actions(lat):
            if kind is not None and action.d != kind:
                continue
            yield from visit(apply_action(lat, action), path + [action])

    yield from visit(root, [])


def find_distance_witness(
        root: CodeLattice,
        depth: int = 4,
        error_type: ErrorType = ErrorType.Z,
        target: int = 4,
        kind: int = 0,
) -> Optional[List[Action]]:
    """
    Primeira sequência (em profundidade) de até `depth` movimentos do tipo
    `kind` cuja distância atinge `target`.
    """
    for path, lat in action_sequences(root, depth, kind):
        if path and code_distance(lat, error_type) >= target:
            logger.info(f"Testemunha de distância {target} com {len(path)} movimentos")
            return path
    return None


def rank_correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Correlação de Spearman"""
    # DataFrame.corr calcula Spearman sem depender do scipy
    frame = pd.DataFrame({"x": list(xs), "y": list(ys)}, dtype=float)
    return float(frame.corr(method="spearman").loc["x", "y"])


def cross_validate(
        root: CodeLattice,
        erasure_profile: NoiseProfile,
        pauli_profile: NoiseProfile,
        trials: int,
        n_depth2: int = 100,
        seed: int = 0,
        convention: str = "z_only",
) -> Tuple[pd.DataFrame, float]:
    """
    Compara P_L do canal de apagamento com P_L do Union-Find sob ruído
    Pauli em todos os filhos da raiz e numa amostra de netos.

    Returns:
        (tabela por código, correlação de postos)
    """
    rng = np.random.default_rng(seed)
    children = [(action, apply_action(root, action)) for action in enumerate_actions(root)]
    codes: List[Tuple[str, CodeLattice]] = [(f"{a.key()}", lat) for a, lat in children]

    grandchildren = [(a, b) for a, lat in children for b in enumerate_actions(lat)]
    picks = rng.choice(len(grandchildren), size=min(n_depth2, len(grandchildren)), replace=False)
    parents = {a.key(): lat for a, lat in children}
    for index in sorted(picks.tolist()):
        a, b = grandchildren[index]
        codes.append((f"{a.key()}+{b.key()}", apply_action(parents[a.key()], b)))

    rows = []
    for code_seed, (code_id, lat) in enumerate(codes):
        erasure = estimate_logical_rate(lat, erasure_profile, trials=trials, seed=seed + code_seed, convention=convention)
        pauli = estimate_union_find_rate(lat, pauli_profile, trials=trials, seed=seed + code_seed, convention=convention)
        rows.append({
            "code_id": code_id,
            "n_edges": lat.n_edges,
            "erasure_rate": erasure.p_hat,
            "union_find_rate": pauli.p_hat,
        })
    frame = pd.DataFrame(rows)
    rho = rank_correlation(frame["erasure_rate"], frame["union_find_rate"])
    logger.info(f"Validação cruzada em {len(frame)} códigos: Spearman = {rho:.3f}")
    return frame, rho
