# app/core/decoding.py
import hashlib
import logging
from collections import deque
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Tuple

from pydantic import BaseModel, ConfigDict

from app.core.exceptions import SyndromeInconsistencyError
from app.core.topology import ErrorType, logical_representatives
from app.models.lattice import CodeLattice

logger = logging.getLogger(__name__)

# Setor de decodificação = tipo do erro corrigido. Erros Z vivem no grafo
# primal e são testados contra os representantes X; erros X vivem no dual.
Sector = ErrorType


class Syndrome(BaseModel):
    """Defeitos (vértices do grafo do setor com paridade ímpar)"""
    model_config = ConfigDict(frozen=True)

    defects: FrozenSet[int]
    sector: Sector

    def __len__(self) -> int:
        return len(self.defects)


class Correction(BaseModel):
    """Correção proposta por um decodificador"""
    model_config = ConfigDict(frozen=True)

    edges: FrozenSet[int]
    sector: Sector


class DecodingGraph:
    """
    Grafo de um setor, indexado para os decodificadores.

    Nós são os vértices do primal (setor Z) ou do dual (setor X), numerados
    pela ordem crescente de rótulo. Cada aresta carrega dois bits: a paridade
    de cruzamento com cada representante lógico do setor oposto.
    """

    def __init__(self, lat: CodeLattice, sector: Sector):
        self.sector = Sector(sector)
        view = lat if self.sector == Sector.Z else lat.dual
        reps = logical_representatives(lat)
        opposite = reps.x_cycles if self.sector == Sector.Z else reps.z_cycles

        self.labels: Tuple[int, ...] = view.vertices
        self.index: Dict[int, int] = {label: i for i, label in enumerate(self.labels)}
        self.n_nodes = len(self.labels)
        self.n_edges = lat.n_edges

        self.endpoints: List[Tuple[int, int]] = [(0, 0)] * self.n_edges
        for e, (u, w) in view.edge_endpoints.items():
            self.endpoints[e] = (self.index[u], self.index[w])

        self.incident: List[List[Tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for e, (u, w) in enumerate(self.endpoints):
            self.incident[u].append((e, w))
            self.incident[w].append((e, u))
        for row in self.incident:
            row.sort()

        self.bits: List[int] = [
            (1 if e in opposite[0] else 0) | (2 if e in opposite[1] else 0)
            for e in range(self.n_edges)
        ]
        # O posto depende só de extremidades e bits: identifica o grafo no memo de postos
        self.digest = hashlib.md5(repr((self.endpoints, self.bits)).encode("utf-8")).hexdigest()

    def defects_of(self, edges: Iterable[int]) -> List[int]:
        parity = [0] * self.n_nodes
        for e in edges:
            u, w = self.endpoints[e]
            parity[u] ^= 1
            parity[w] ^= 1
        return [i for i, bit in enumerate(parity) if bit]

    def flips(self, edges: Iterable[int]) -> int:
        """Paridades de cruzamento com os dois lógicos opostos, como bits"""
        acc = 0
        for e in edges:
            acc ^= self.bits[e]
        return acc

    def rank(self, erased: Iterable[int]) -> int:
        """
        Posto da imagem do espaço de ciclos apagado na homologia do toro.

        União-busca com potenciais XOR: cada aresta que fecha um ciclo
        contribui com a classe pot[u] ^ pot[w] ^ bits[e].
        """
        parent: Dict[int, int] = {}
        potential: Dict[int, int] = {}

        def find(x: int) -> Tuple[int, int]:
            acc = 0
            while parent.get(x, x) != x:
                acc ^= potential[x]
                x = parent[x]
            return x, acc

        span = 1  # conjunto de classes alcançadas, codificado em 4 bits
        for e in erased:
            u, w = self.endpoints[e]
            ru, pu = find(u)
            rw, pw = find(w)
            if ru != rw:
                parent[rw] = ru
                potential[rw] = pu ^ pw ^ self.bits[e]
                continue
            c = pu ^ pw ^ self.bits[e]
            if c and not (span >> c) & 1:
                span |= span_shift(span, c)
                if span == 0b1111:
                    return 2
        return {1: 0, 0b1111: 2}.get(span, 1)


def span_shift(span: int, c: int) -> int:
    """Fecha o conjunto de classes sob soma com c (Z2 x Z2)"""
    out = 0
    for a in range(4):
        if (span >> a) & 1:
            out |= 1 << (a ^ c)
    return out


@lru_cache(maxsize=256)
def decoding_graph(lat: CodeLattice, sector: Sector) -> DecodingGraph:
    return DecodingGraph(lat, sector)


def syndrome(lat: CodeLattice, error_edges: Iterable[int], sector: Sector) -> Syndrome:
    """Defeito em v sse um número ímpar de arestas do erro toca v"""
    graph = decoding_graph(lat, Sector(sector))
    defects = graph.defects_of(error_edges)
    return Syndrome(defects=frozenset(graph.labels[i] for i in defects), sector=graph.sector)


def peel_forest(graph: DecodingGraph, erased: List[int], defective: List[int]) -> List[int]:
    """
    Descascamento sobre índices de nós. `defective` é alterado no lugar.

    Floresta BFS do subgrafo apagado (raízes em ordem crescente, arestas por
    id); folhas processadas da mais distante para a raiz.
    """
    erased_set = set(erased)
    order: List[int] = []
    parent_edge: Dict[int, Tuple[int, int]] = {}
    touched = sorted({x for e in erased_set for x in graph.endpoints[e]})
    roots = []
    for root in touched:
        if root in parent_edge:
            continue
        roots.append(root)
        parent_edge[root] = (-1, -1)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for e, w in graph.incident[u]:
                if e in erased_set and w not in parent_edge:
                    parent_edge[w] = (e, u)
                    queue.append(w)

    correction: List[int] = []
    for u in reversed(order):
        e, up = parent_edge[u]
        if e >= 0 and defective[u]:
            correction.append(e)
            defective[u] = 0
            defective[up] ^= 1

    leftover = [graph.labels[i] for i, bit in enumerate(defective) if bit]
    if leftover:
        raise SyndromeInconsistencyError(
            f"Síndrome não suportada pelo apagamento: defeitos restantes em {leftover}"
        )
    return correction


def peel_decode(lat: CodeLattice, erased: Iterable[int], syn: Syndrome, sector: Sector) -> Correction:
    """
    Decodificador de descascamento (máxima verossimilhança no apagamento).

    Raises:
        SyndromeInconsistencyError: defeitos fora do apagamento ou com
            paridade ímpar em alguma componente
    """
    graph = decoding_graph(lat, Sector(sector))
    defective = [0] * graph.n_nodes
    for label in syn.defects:
        defective[graph.index[label]] = 1
    correction = peel_forest(graph, sorted(set(erased)), defective)
    return Correction(edges=frozenset(correction), sector=graph.sector)


def homology_rank(lat: CodeLattice, erased: Iterable[int], sector: Sector) -> int:
    """k(E) em {0, 1, 2}; a falha ótima condicionada a E vale 1 - 2^-k"""
    return decoding_graph(lat, Sector(sector)).rank(sorted(set(erased)))


def logical_flips(lat: CodeLattice, residual: Iterable[int], sector: Sector) -> int:
    """Bits dos lógicos invertidos por um resíduo sem síndrome"""
    return decoding_graph(lat, Sector(sector)).flips(residual)


def is_logical_failure(lat: CodeLattice, residual: Iterable[int], sector: Sector) -> bool:
    """
    Verdadeiro sse o resíduo cruza um número ímpar de vezes algum
    representante lógico do setor oposto.

    Raises:
        SyndromeInconsistencyError: o resíduo não é um ciclo
    """
    graph = decoding_graph(lat, Sector(sector))
    residual = list(residual)
    if graph.defects_of(residual):
        raise SyndromeInconsistencyError("Resíduo com síndrome não vazia não é um ciclo")
    return graph.flips(residual) != 0


def union_find_edges(graph: DecodingGraph, defective: List[int]) -> List[int]:
    """Crescimento e fusão de clusters; devolve a correção em ids de aresta"""
    n = graph.n_nodes
    parent = list(range(n))
    size = [1] * n
    parity = list(defective)
    boundary: Dict[int, List[int]] = {i: [i] for i in range(n)}
    support = [0] * graph.n_edges

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra == rb:
            return
        if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
        parity[ra] ^= parity[rb]
        boundary[ra].extend(boundary.pop(rb))

    rounds = 0
    while True:
        odd_roots = sorted({find(i) for i in range(n) if parity[find(i)]})
        if not odd_roots:
            break
        rounds += 1
        fusion: List[int] = []
        for root in odd_roots:
            for u in boundary[root]:
                for e, _ in graph.incident[u]:
                    if support[e] < 2:
                        support[e] += 1
                        if support[e] == 2:
                            fusion.append(e)
        for e in fusion:
            union(*graph.endpoints[e])
        for root in {find(i) for i in range(n)}:
            boundary[root] = [
                u for u in dict.fromkeys(boundary[root])
                if any(support[e] < 2 for e, _ in graph.incident[u])
            ]
        if rounds > 4 * graph.n_edges:
            raise SyndromeInconsistencyError("Union-Find não convergiu: síndrome com paridade ímpar?")

    grown = [e for e in range(graph.n_edges) if support[e] == 2]
    logger.debug(f"Union-Find: {rounds} rodadas, {len(grown)} arestas crescidas")
    return peel_forest(graph, grown, defective)


def union_find_decode(lat: CodeLattice, syn: Syndrome, sector: Sector) -> Correction:
    """
    Decodificador Union-Find.

    Clusters ímpares crescem meia aresta por rodada a partir da fronteira;
    arestas completas fundem clusters (união por tamanho, compressão de
    caminho, empate para o menor rótulo). Ao fim, descasca dentro das
    arestas crescidas.
    """
    graph = decoding_graph(lat, Sector(sector))
    defective = [0] * graph.n_nodes
    for label in syn.defects:
        defective[graph.index[label]] = 1
    correction = union_find_edges(graph, defective)
    return Correction(edges=frozenset(correction), sector=graph.sector)
