# app/core/estimation.py
import concurrent.futures
from concurrent.futures.process import BrokenProcessPool
import logging
import pickle
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.config import EXACT_EDGE_LIMIT, FAILURE_CONVENTIONS, FAILURE_MODES, get_settings
from app.core.decoding import DecodingGraph, Sector, peel_forest, union_find_edges, decoding_graph, span_shift
from app.core.exceptions import ConfigError, InvariantViolation, SizeGuardError
from app.core.noise import ResolvedNoise, resolve_profile
from app.core.topology import canonical_percept
from app.models.lattice import CodeLattice
from app.schemas.estimation import RateEstimate
from app.schemas.noise import NoiseProfile
from app.utils.cache_system import estimate_cache, generate_cache_key, rank_memo

logger = logging.getLogger(__name__)

# Ciclo não trivial num grafo sem arestas duplas tem pelo menos 3 arestas
_MIN_CYCLE = 3


def _options(convention: Optional[str], mode: Optional[str]) -> Tuple[str, str]:
    settings = get_settings()
    convention = convention or settings.failure_convention
    mode = mode or settings.failure_mode
    if convention not in FAILURE_CONVENTIONS:
        raise ConfigError(f"Convenção de falha inválida: '{convention}'")
    if mode not in FAILURE_MODES:
        raise ConfigError(f"Modo de falha inválido: '{mode}'")
    return convention, mode


def _sectors(convention: str) -> List[Tuple[Sector, int]]:
    # Linha da matriz de sorteios onde começa cada setor
    if convention == "z_only":
        return [(Sector.Z, 2)]
    return [(Sector.X, 0), (Sector.Z, 2)]


def _mask_rank(graph: DecodingGraph, packed_row: np.ndarray) -> int:
    key = (graph.digest, graph.sector.value, packed_row.tobytes())
    rank = rank_memo.get(key)
    if rank is None:
        edges = np.flatnonzero(np.unpackbits(packed_row)[: graph.n_edges])
        rank = graph.rank(edges.tolist())
        rank_memo.set(key, rank)
    return rank


def _check_peel(graph: DecodingGraph, erased: List[int], realized: List[int]) -> List[int]:
    defective = [0] * graph.n_nodes
    for i in graph.defects_of(realized):
        defective[i] = 1
    correction = peel_forest(graph, erased, defective)
    if not set(correction) <= set(erased):
        raise InvariantViolation("Correção de descascamento fora do apagamento")
    residual = set(realized) ^ set(correction)
    if graph.defects_of(residual):
        raise InvariantViolation("Correção de descascamento não reproduz a síndrome")
    return correction


def _sector_failures(graph: DecodingGraph, erased: np.ndarray, realized: np.ndarray, mode: str, debug: bool) -> np.ndarray:
    """Vetor booleano de falhas de um setor para um lote de tentativas"""
    failed = np.zeros(erased.shape[0], dtype=bool)
    if debug:
        for t in np.flatnonzero(erased.any(axis=1)):
            _check_peel(graph, np.flatnonzero(erased[t]).tolist(), np.flatnonzero(realized[t]).tolist())

    candidates = np.flatnonzero(erased.sum(axis=1) >= _MIN_CYCLE)
    if candidates.size == 0:
        return failed
    packed = np.packbits(erased[candidates], axis=1)
    unique_rows, inverse = np.unique(packed, axis=0, return_inverse=True)
    ranks = np.fromiter((_mask_rank(graph, row) for row in unique_rows), dtype=int, count=len(unique_rows))
    covered = candidates[ranks[inverse.reshape(-1)] > 0]

    if mode == "covered":
        failed[covered] = True
        return failed

    for t in covered:
        erased_edges = np.flatnonzero(erased[t]).tolist()
        realized_edges = np.flatnonzero(realized[t]).tolist()
        defective = [0] * graph.n_nodes
        for i in graph.defects_of(realized_edges):
            defective[i] = 1
        correction = peel_forest(graph, erased_edges, defective)
        failed[t] = (graph.flips(realized_edges) ^ graph.flips(correction)) != 0
    return failed


def _erasure_chunk(lat: CodeLattice, table: ResolvedNoise, size: int, seed_seq: np.random.SeedSequence,
                   convention: str, mode: str, debug: bool) -> int:
    rng = np.random.default_rng(seed_seq)
    draws = rng.random((size, 4, table.n_qubits))
    failed = np.zeros(size, dtype=bool)
    for sector, row in _sectors(convention):
        p = table.px_array if sector == Sector.X else table.pz_array
        if not p.any():
            continue
        erased = draws[:, row, :] < p
        realized = erased & (draws[:, row + 1, :] < 0.5)
        failed |= _sector_failures(decoding_graph(lat, sector), erased, realized, mode, debug)
    return int(failed.sum())


def _pauli_chunk(lat: CodeLattice, table: ResolvedNoise, size: int, seed_seq: np.random.SeedSequence,
                 convention: str, mode: str, debug: bool) -> int:
    rng = np.random.default_rng(seed_seq)
    draws = rng.random((size, 2, table.n_qubits))
    failed = np.zeros(size, dtype=bool)
    for sector, row in _sectors(convention):
        p = table.px_array if sector == Sector.X else table.pz_array
        if not p.any():
            continue
        graph = decoding_graph(lat, sector)
        errors = draws[:, row // 2, :] < p
        for t in np.flatnonzero(errors.any(axis=1)):
            error_edges = np.flatnonzero(errors[t]).tolist()
            defective = [0] * graph.n_nodes
            for i in graph.defects_of(error_edges):
                defective[i] = 1
            correction = union_find_edges(graph, defective)
            if graph.flips(error_edges) ^ graph.flips(correction):
                failed[t] = True
    return int(failed.sum())


def _run_chunks(worker, lat: CodeLattice, table: ResolvedNoise, trials: int, seed: int,
                convention: str, mode: str, threads: int, debug: bool) -> int:
    """
    Divide as tentativas em blocos, cada um com seu subfluxo
    SeedSequence(seed).spawn; o resultado não depende do número de workers.
    """
    chunk_size = max(1, get_settings().chunk_size)
    sizes = [min(chunk_size, trials - start) for start in range(0, trials, chunk_size)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(lat, table, size, child, convention, mode, debug) for size, child in zip(sizes, children)]

    if threads > 1 and len(jobs) > 1:
        try:
            with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as executor:
                return sum(executor.map(worker, *zip(*jobs)))
        except (OSError, pickle.PicklingError, BrokenProcessPool) as e:
            logger.warning(f"Pool de processos indisponível ({e}); executando em série")
    return sum(worker(*job) for job in jobs)


def estimate_logical_rate(
        lat: CodeLattice,
        profile: NoiseProfile,
        trials: Optional[int] = None,
        seed: int = 0,
        convention: Optional[str] = None,
        mode: Optional[str] = None,
        threads: Optional[int] = None,
        use_cache: Optional[bool] = None,
) -> RateEstimate:
    """
    Estima P_L pelo canal de apagamento com decodificação por descascamento.

    mode="decoder" executa amostra -> síndrome -> descascamento -> teste
    lógico; mode="covered" conta como falha todo apagamento que contém um
    ciclo não trivial. Determinístico para (lat, perfil, tentativas, seed).
    """
    settings = get_settings()
    convention, mode = _options(convention, mode)
    trials = settings.estimator_trials if trials is None else trials
    if trials <= 0:
        raise ConfigError("Número de tentativas deve ser positivo")
    use_cache = settings.estimate_cache if use_cache is None else use_cache
    table = resolve_profile(profile, lat)

    cache_key = None
    if use_cache:
        if estimate_cache.max_size != settings.cache_size:
            estimate_cache.resize(settings.cache_size)
        cache_key = generate_cache_key(
            "estimate",
            digest=canonical_percept(lat).digest,
            profile=table.profile_id,
            trials=trials,
            convention=convention,
            mode=mode,
        )
        hit = estimate_cache.get(cache_key)
        if hit is not None:
            logger.debug(f"Cache hit para estimativa {cache_key[:8]}")
            return hit.model_copy(update={"cached": True})

    if table.is_noiseless():
        failures = 0
    else:
        failures = _run_chunks(
            _erasure_chunk, lat, table, trials, seed, convention, mode,
            threads or settings.threads, settings.debug_checks,
        )
    estimate = RateEstimate.from_counts(failures, trials, seed, convention=convention, mode=mode)
    logger.debug(f"P_L={estimate.p_hat:.5f} ± {estimate.stderr:.5f} ({lat.n_edges} qubits, {trials} tentativas)")

    if cache_key is not None:
        estimate_cache.set(cache_key, estimate)
    return estimate


def estimate_union_find_rate(
        lat: CodeLattice,
        profile: NoiseProfile,
        trials: Optional[int] = None,
        seed: int = 0,
        convention: Optional[str] = None,
        threads: Optional[int] = None,
) -> RateEstimate:
    """P_L sob ruído Pauli i.i.d. (sem marcação de apagamento) com Union-Find"""
    settings = get_settings()
    convention, _ = _options(convention, None)
    trials = settings.estimator_trials if trials is None else trials
    if trials <= 0:
        raise ConfigError("Número de tentativas deve ser positivo")
    table = resolve_profile(profile, lat)
    failures = 0
    if not table.is_noiseless():
        failures = _run_chunks(
            _pauli_chunk, lat, table, trials, seed, convention, "decoder",
            threads or settings.threads, False,
        )
    return RateEstimate.from_counts(
        failures, trials, seed, convention=convention, mode="decoder", pipeline="union_find"
    )


# ---------------------------------------------------------------------------
# Oráculo exato
# ---------------------------------------------------------------------------

def _exact_sector(graph: DecodingGraph, probs: Sequence[float], mode: str) -> float:
    """
    Soma sobre subconjuntos apagados E de Pr[E] * peso(posto(E)) por busca
    em profundidade com união-busca reversível.
    """
    if mode == "covered":
        weight = (0.0, 1.0, 1.0)
    else:
        weight = (0.0, 0.5, 0.75)

    n_nodes = graph.n_nodes
    parent = list(range(n_nodes))
    potential = [0] * n_nodes
    size = [1] * n_nodes

    def find(x: int) -> Tuple[int, int]:
        acc = 0
        while parent[x] != x:
            acc ^= potential[x]
            x = parent[x]
        return x, acc

    def rank_of(span: int) -> int:
        return {1: 0, 0b1111: 2}.get(span, 1)

    def visit(i: int, span: int, prob: float) -> float:
        if span == 0b1111:
            return prob * weight[2]
        if i == graph.n_edges:
            return prob * weight[rank_of(span)]
        p = probs[i]
        total = 0.0
        if p < 1.0:
            total += visit(i + 1, span, prob * (1.0 - p))
        if p > 0.0:
            u, w = graph.endpoints[i]
            ru, pu = find(u)
            rw, pw = find(w)
            if ru != rw:
                if size[ru] < size[rw]:
                    ru, rw = rw, ru
                parent[rw] = ru
                potential[rw] = pu ^ pw ^ graph.bits[i]
                size[ru] += size[rw]
                total += visit(i + 1, span, prob * p)
                size[ru] -= size[rw]
                parent[rw] = rw
                potential[rw] = 0
            else:
                c = pu ^ pw ^ graph.bits[i]
                new_span = span if (span >> c) & 1 else span | span_shift(span, c)
                total += visit(i + 1, new_span, prob * p)
        return total

    return visit(0, 1, 1.0)


def exact_sector_rate(lat: CodeLattice, table: ResolvedNoise, sector: Sector, mode: str = "decoder") -> float:
    if lat.n_edges > EXACT_EDGE_LIMIT:
        raise SizeGuardError(f"Oráculo exato limitado a {EXACT_EDGE_LIMIT} arestas (reticulado tem {lat.n_edges})")
    sector = Sector(sector)
    probs = table.px if sector == Sector.X else table.pz
    if not any(probs):
        return 0.0
    return _exact_sector(decoding_graph(lat, sector), probs, mode)


def exact_logical_rate(
        lat: CodeLattice,
        profile: NoiseProfile,
        convention: Optional[str] = None,
        mode: Optional[str] = None,
) -> float:
    """
    P_L exata: enumeração de todos os apagamentos (até 20 arestas).

    Os setores são independentes; em "any" combinam como 1 - (1-qX)(1-qZ).

    Raises:
        SizeGuardError: reticulado com mais de 20 arestas
    """
    convention, mode = _options(convention, mode)
    if lat.n_edges > EXACT_EDGE_LIMIT:
        raise SizeGuardError(f"Oráculo exato limitado a {EXACT_EDGE_LIMIT} arestas (reticulado tem {lat.n_edges})")
    table = resolve_profile(profile, lat)
    qz = exact_sector_rate(lat, table, Sector.Z, mode)
    if convention == "z_only":
        return qz
    qx = exact_sector_rate(lat, table, Sector.X, mode)
    return 1.0 - (1.0 - qx) * (1.0 - qz)
