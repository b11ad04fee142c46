# app/core/topology.py
import hashlib
import logging
from collections import Counter, deque
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict

from app.config import MAX_DEGREE, MIN_DEGREE
from app.core.exceptions import ConfigError, IllegalActionError, InvariantViolation
from app.models.lattice import Action, CodeLattice, Percept

logger = logging.getLogger(__name__)


class ErrorType(str, Enum):
    """Tipo de erro/operador lógico: Z vive no primal, X no dual"""
    Z = "Z"
    X = "X"


class LogicalRepresentatives(BaseModel):
    """
    Representantes dos operadores lógicos.

    z_cycles[i] são ciclos do grafo primal (strings Z), x_cycles[j] ciclos do
    dual (strings X); z_cycles[i] e x_cycles[j] se cruzam um número ímpar de
    vezes sse i == j.
    """
    model_config = ConfigDict(frozen=True)

    z_cycles: Tuple[FrozenSet[int], FrozenSet[int]]
    x_cycles: Tuple[FrozenSet[int], FrozenSet[int]]

    def for_type(self, error_type: ErrorType) -> Tuple[FrozenSet[int], FrozenSet[int]]:
        return self.z_cycles if error_type == ErrorType.Z else self.x_cycles


# ---------------------------------------------------------------------------
# Construção
# ---------------------------------------------------------------------------

def grid_map(rows: int, cols: int) -> CodeLattice:
    """
    Mapa combinatório da grade quadrada rows x cols no toro, sem validação.

    Vértice (r, c) tem rótulo r*cols + c; a aresta horizontal que sai de
    (r, c) para leste tem id 2*(r*cols + c) e a vertical (para norte) id
    2*(r*cols + c) + 1. A face de canto inferior esquerdo (r, c) recebe o
    mesmo rótulo do vértice (r, c).
    """
    if rows < 1 or cols < 1:
        raise ConfigError(f"Dimensões inválidas: {rows}x{cols}")

    def vid(r: int, c: int) -> int:
        return (r % rows) * cols + (c % cols)

    n_edges = 2 * rows * cols
    n_darts = 2 * n_edges
    opposite = [d ^ 1 for d in range(n_darts)]
    edge_of = [d // 2 for d in range(n_darts)]
    vertex_of = [0] * n_darts
    face_of = [0] * n_darts
    nav = [0] * n_darts

    def east(r, c):
        return 2 * (2 * vid(r, c))

    def north(r, c):
        return 2 * (2 * vid(r, c) + 1)

    def west(r, c):
        return 2 * (2 * vid(r, c - 1)) + 1

    def south(r, c):
        return 2 * (2 * vid(r - 1, c) + 1) + 1

    for r in range(rows):
        for c in range(cols):
            e, n, w, s = east(r, c), north(r, c), west(r, c), south(r, c)
            for d in (e, n, w, s):
                vertex_of[d] = vid(r, c)
            # Rotação anti-horária: L -> N -> O -> S
            nav[e], nav[n], nav[w], nav[s] = n, w, s, e
            # Face com canto inferior esquerdo (r, c)
            f = vid(r, c)
            for d in (east(r + 1, c), south(r + 1, c + 1), west(r, c + 1), north(r, c)):
                face_of[d] = f

    return CodeLattice(
        opposite=tuple(opposite),
        next_around_vertex=tuple(nav),
        vertex_of=tuple(vertex_of),
        face_of=tuple(face_of),
        edge_of=tuple(edge_of),
        n_initial_qubits=n_edges,
    )


def build_torus_grid(rows: int, cols: int) -> CodeLattice:
    """
    Código tórico na grade quadrada rows x cols.

    Grades com alguma dimensão menor que 3 geram arestas duplas (dois
    vizinhos iguais) e são rejeitadas.
    """
    if rows < 3 or cols < 3:
        raise ConfigError(
            f"Grade {rows}x{cols} rejeitada: dimensões abaixo de 3 criam arestas duplas"
        )
    lattice = grid_map(rows, cols)
    check_invariants(lattice)
    return lattice


def dual_view(lat: CodeLattice) -> CodeLattice:
    """Reticulado dual (vértices <-> faces, mesmos ids de aresta)"""
    return lat.dual


# ---------------------------------------------------------------------------
# Invariantes
# ---------------------------------------------------------------------------

def _connected(nodes: Sequence[int], links: Sequence[Tuple[int, int]]) -> bool:
    graph = nx.MultiGraph()
    graph.add_nodes_from(nodes)
    graph.add_edges_from(links)
    return nx.is_connected(graph) if nodes else False


def _has_double_edge(links: Sequence[Tuple[int, int]]) -> bool:
    seen = set()
    for u, w in links:
        key = (min(u, w), max(u, w))
        if u == w or key in seen:
            return True
        seen.add(key)
    return False


def check_invariants(lat: CodeLattice) -> None:
    """
    Valida o mapa combinatório; levanta InvariantViolation nomeando o
    invariante violado.
    """
    n = lat.n_darts
    for d in range(n):
        o = lat.opposite[d]
        if o == d or lat.opposite[o] != d:
            raise InvariantViolation(f"opposite não é involução sem pontos fixos (dart {d})")
        if lat.edge_of[o] != lat.edge_of[d]:
            raise InvariantViolation(f"darts opostos com arestas diferentes (dart {d})")
    if list(lat.edges) != list(range(n // 2)):
        raise InvariantViolation("ids de aresta devem ser 0..n-1, dois darts por aresta")
    if sorted(lat.next_around_vertex) != list(range(n)):
        raise InvariantViolation("next_around_vertex não é permutação")
    for v, orbit in lat.rotations.items():
        if v < 0 or any(lat.vertex_of[d] != lat.vertex_of[orbit[0]] for d in orbit):
            raise InvariantViolation(f"órbitas de vértice não particionam os darts (vértice {lat.vertex_of[orbit[0]]})")
    for f, orbit in lat.boundaries.items():
        if f < 0 or any(lat.face_of[d] != lat.face_of[orbit[0]] for d in orbit):
            raise InvariantViolation(f"órbitas de face não particionam os darts (face {lat.face_of[orbit[0]]})")

    euler = len(lat.vertices) - lat.n_edges + len(lat.faces)
    if euler != 0:
        raise InvariantViolation(f"característica de Euler {euler} != 0")

    for v in lat.vertices:
        if not MIN_DEGREE <= lat.vertex_degree(v) <= MAX_DEGREE:
            raise InvariantViolation(f"grau do vértice {v} = {lat.vertex_degree(v)} fora de [3, 8]")
    for f in lat.faces:
        if not MIN_DEGREE <= lat.face_degree(f) <= MAX_DEGREE:
            raise InvariantViolation(f"grau da face {f} = {lat.face_degree(f)} fora de [3, 8]")

    primal_links = list(lat.edge_endpoints.values())
    dual_links = list(lat.edge_faces.values())
    if _has_double_edge(primal_links):
        raise InvariantViolation("aresta dupla no grafo primal")
    if _has_double_edge(dual_links):
        raise InvariantViolation("aresta dupla no grafo dual")
    if not _connected(lat.vertices, primal_links):
        raise InvariantViolation("grafo primal desconexo")
    if not _connected(lat.faces, dual_links):
        raise InvariantViolation("grafo dual desconexo")


# ---------------------------------------------------------------------------
# Movimentos
# ---------------------------------------------------------------------------

def _corner_faces(view: CodeLattice, v: int) -> List[int]:
    # Canto i fica entre rot[i-1] e rot[i]; pertence à face de rot[i]
    return [view.face_of[d] for d in view.rotations[v]]


def _split_violation(view: CodeLattice, v: int, p1: int, p2: int) -> Tuple[Optional[str], Optional[Tuple[int, int]]]:
    """Retorna (motivo, None) se a divisão é ilegal, ou (None, (i, j)) com os cantos"""
    if v not in view.rotations:
        return f"vértice {v} inexistente", None
    if p1 == p2:
        return "p1 == p2 criaria um laço", None
    k = view.vertex_degree(v)
    if k < MIN_DEGREE + 1:
        return f"vértice {v} de grau {k} < 4 não pode ser dividido", None
    corners = _corner_faces(view, v)
    counts = Counter(corners)
    if counts[p1] != 1 or counts[p2] != 1:
        return f"faces {p1}, {p2} não ocupam exatamente um canto de {v}", None
    i, j = sorted((corners.index(p1), corners.index(p2)))
    if j - i < 2 or k - (j - i) < 2:
        return "um dos novos vértices teria grau < 3", None
    if p2 in view.face_adjacency[p1]:
        return f"faces {p1} e {p2} já são vizinhas (aresta dupla no dual)", None
    if view.face_degree(p1) + 1 > MAX_DEGREE or view.face_degree(p2) + 1 > MAX_DEGREE:
        return "grau de face excederia 8", None
    return None, (i, j)


def _view_actions(view: CodeLattice, d: int) -> List[Action]:
    actions = []
    for v in view.vertices:
        k = view.vertex_degree(v)
        if k < MIN_DEGREE + 1:
            continue
        corners = _corner_faces(view, v)
        counts = Counter(corners)
        for i in range(k):
            for j in range(i + 2, k):
                if k - (j - i) < 2:
                    continue
                f1, f2 = corners[i], corners[j]
                if f1 == f2 or counts[f1] > 1 or counts[f2] > 1:
                    continue
                if f2 in view.face_adjacency[f1]:
                    continue
                if view.face_degree(f1) >= MAX_DEGREE or view.face_degree(f2) >= MAX_DEGREE:
                    continue
                actions.append(Action(d=d, v=v, p1=min(f1, f2), p2=max(f1, f2)))
    return actions


def enumerate_actions(lat: CodeLattice) -> List[Action]:
    """
    Todas as ações legais, ordenadas por (d, v, p1, p2).

    d=0 divide um vértice primal, d=1 divide uma plaqueta (vértice do dual).
    """
    actions = _view_actions(lat, 0) + _view_actions(dual_view(lat), 1)
    actions.sort(key=Action.key)
    return actions


def _split_vertex(view: CodeLattice, v: int, i: int, j: int) -> CodeLattice:
    rot = view.rotations[v]
    arc_a = rot[i:j]
    arc_b = rot[j:] + rot[:i]

    opposite = list(view.opposite)
    nav = list(view.next_around_vertex)
    vertex_of = list(view.vertex_of)
    face_of = list(view.face_of)
    edge_of = list(view.edge_of)

    x, y = len(opposite), len(opposite) + 1
    new_edge = max(edge_of) + 1
    opposite += [y, x]
    edge_of += [new_edge, new_edge]
    # x fecha o arco A no canto j, y fecha o arco B no canto i
    nav += [arc_a[0], arc_b[0]]
    nav[arc_a[-1]] = x
    nav[arc_b[-1]] = y
    face_of += [view.face_of[rot[j % len(rot)]], view.face_of[rot[i]]]

    # O arco com o dart de menor aresta (rot[0]) mantém o rótulo v
    used = set(view.vertices)
    new_label = next(label for label in range(len(used) + 1) if label not in used)
    moved = arc_a if rot[0] in arc_b else arc_b
    moved_new_dart = x if moved is arc_a else y
    kept_new_dart = y if moved is arc_a else x
    for d in moved:
        vertex_of[d] = new_label
    vertex_of += [0, 0]
    vertex_of[moved_new_dart] = new_label
    vertex_of[kept_new_dart] = v

    return CodeLattice.model_construct(
        opposite=tuple(opposite),
        next_around_vertex=tuple(nav),
        vertex_of=tuple(vertex_of),
        face_of=tuple(face_of),
        edge_of=tuple(edge_of),
        n_initial_qubits=view.n_initial_qubits,
    )


def apply_action(lat: CodeLattice, action: Action, validate: bool = True) -> CodeLattice:
    """
    Aplica um movimento e devolve um novo reticulado com um qubit a mais.

    Raises:
        IllegalActionError: ação fora de enumerate_actions, com o invariante violado
    """
    view = lat if action.d == 0 else dual_view(lat)
    reason, corners = _split_violation(view, action.v, action.p1, action.p2)
    if reason is not None:
        raise IllegalActionError(f"Ação {action.key()} ilegal: {reason}")

    i, j = corners
    new_view = _split_vertex(view, action.v, i, j)
    result = new_view if action.d == 0 else dual_view(new_view)
    # Normaliza: a visão primal guarda a rotação sigma explicitamente
    result = CodeLattice.model_construct(
        opposite=result.opposite,
        next_around_vertex=tuple(result.next_around_vertex),
        vertex_of=result.vertex_of,
        face_of=result.face_of,
        edge_of=result.edge_of,
        n_initial_qubits=result.n_initial_qubits,
    )
    if validate:
        check_invariants(result)
    return result


def apply_actions(lat: CodeLattice, actions: Sequence[Action]) -> CodeLattice:
    for action in actions:
        lat = apply_action(lat, action)
    return lat


# ---------------------------------------------------------------------------
# Percepto
# ---------------------------------------------------------------------------

def canonical_percept(lat: CodeLattice) -> Percept:
    """
    Tupla de matrizes de adjacência ordenadas (primal e dual).

    Vértices em ordem crescente de rótulo; para cada um, as arestas na ordem
    da rotação a partir da menor; arestas renomeadas pela ordem de primeira
    aparição. O dual reaproveita a mesma renomeação.
    """
    relabel: Dict[int, int] = {}
    stream: List[int] = [len(lat.vertices)]
    for v in lat.vertices:
        row = []
        for e in lat.vertex_edges(v):
            if e not in relabel:
                relabel[e] = len(relabel)
            row.append(relabel[e])
        stream += [v, len(row)] + row

    stream.append(len(lat.faces))
    for f in lat.faces:
        row = [relabel[e] for e in lat.face_edges(f)]
        pivot = row.index(min(row))
        row = row[pivot:] + row[:pivot]
        stream += [f, len(row)] + row

    canonical = np.asarray(stream, dtype="<u2").tobytes()
    return Percept(canonical_bytes=canonical, digest=hashlib.md5(canonical).hexdigest())


# ---------------------------------------------------------------------------
# Homologia
# ---------------------------------------------------------------------------

def _bfs_tree(nodes: Sequence[int], incident: Dict[int, List[Tuple[int, int]]], allowed) -> Dict[int, Tuple[int, int]]:
    """Árvore BFS determinística: nó -> (pai, aresta); raiz mapeia para (-1, -1)"""
    root = min(nodes)
    parent = {root: (-1, -1)}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for e, w in incident[u]:
            if w not in parent and allowed(e):
                parent[w] = (u, e)
                queue.append(w)
    return parent


def _tree_path(parent: Dict[int, Tuple[int, int]], u: int) -> set:
    path = set()
    while parent[u][0] != -1:
        path ^= {parent[u][1]}
        u = parent[u][0]
    return path


def _incidence(view: CodeLattice) -> Dict[int, List[Tuple[int, int]]]:
    incident: Dict[int, List[Tuple[int, int]]] = {v: [] for v in view.vertices}
    for v in view.vertices:
        for d in view.rotations[v]:
            incident[v].append((view.edge_of[d], view.vertex_of[view.opposite[d]]))
    for v in incident:
        incident[v].sort()
    return incident


def _tree_cotree(lat: CodeLattice) -> Tuple[List[FrozenSet[int]], List[FrozenSet[int]]]:
    primal_inc = _incidence(lat)
    tree = _bfs_tree(lat.vertices, primal_inc, lambda e: True)
    tree_edges = {e for _, e in tree.values() if e >= 0}

    dual = lat.dual
    dual_inc = _incidence(dual)
    cotree = _bfs_tree(dual.vertices, dual_inc, lambda e: e not in tree_edges)
    if len(cotree) != len(dual.vertices):
        raise InvariantViolation("co-árvore não cobre o dual")
    cotree_edges = {e for _, e in cotree.values() if e >= 0}

    leftover = [e for e in lat.edges if e not in tree_edges and e not in cotree_edges]
    if len(leftover) != 2:
        raise InvariantViolation(f"decomposição árvore/co-árvore deixou {len(leftover)} arestas (esperado 2)")

    z_cycles, x_cycles = [], []
    for e in leftover:
        u, w = lat.edge_endpoints[e]
        z_cycles.append(frozenset(_tree_path(tree, u) ^ _tree_path(tree, w) ^ {e}))
        f, g = lat.edge_faces[e]
        x_cycles.append(frozenset(_tree_path(cotree, f) ^ _tree_path(cotree, g) ^ {e}))
    return z_cycles, x_cycles


def _class_bits(edges: Sequence[int], basis: Sequence[FrozenSet[int]]) -> Dict[int, int]:
    return {e: sum(1 << k for k, cycle in enumerate(basis) if e in cycle) for e in edges}


def _cover_graph(view: CodeLattice, bits: Dict[int, int]) -> nx.Graph:
    """Recobrimento Z2 x Z2: nó (v, c) acumula a paridade de cruzamento c"""
    graph = nx.Graph()
    for e, (u, w) in view.edge_endpoints.items():
        b = bits[e]
        for c in range(4):
            graph.add_edge((u, c), (w, c ^ b), edge=e)
    return graph


def _shortest_by_class(view: CodeLattice, graph: nx.Graph) -> Dict[int, Tuple[int, int]]:
    """Para cada classe não trivial: (peso mínimo, vértice base)"""
    best: Dict[int, Tuple[int, int]] = {}
    for v in view.vertices:
        lengths = nx.single_source_shortest_path_length(graph, (v, 0))
        for c in (1, 2, 3):
            if (v, c) in lengths and (c not in best or lengths[(v, c)] < best[c][0]):
                best[c] = (lengths[(v, c)], v)
    return best


def _cycle_in_class(graph: nx.Graph, v: int, c: int) -> FrozenSet[int]:
    path = nx.shortest_path(graph, (v, 0), (v, c))
    cycle: set = set()
    for a, b in zip(path, path[1:]):
        cycle ^= {graph.edges[a, b]["edge"]}
    return frozenset(cycle)


@lru_cache(maxsize=512)
def logical_representatives(lat: CodeLattice) -> LogicalRepresentatives:
    """
    Ciclos lógicos recalculados do zero a cada reticulado.

    A decomposição árvore/co-árvore fornece uma base simplética; depois os
    ciclos primais são trocados pelos dois mais curtos de classes distintas
    e os duais pela base dual correspondente, também encurtada.
    """
    z_basis, x_basis = _tree_cotree(lat)

    primal_graph = _cover_graph(lat, _class_bits(lat.edges, x_basis))
    best = _shortest_by_class(lat, primal_graph)
    classes = sorted(best, key=lambda c: (best[c][0], c))[:2]
    z_cycles = tuple(_cycle_in_class(primal_graph, best[c][1], c) for c in classes)

    # Matriz M[i][j] = paridade de z'_i com x_j; a base dual é N = M^-1
    m = [[(c >> j) & 1 for j in range(2)] for c in classes]
    det = (m[0][0] * m[1][1] + m[0][1] * m[1][0]) % 2
    if det != 1:
        raise InvariantViolation("representantes primais linearmente dependentes")
    inverse = [[m[1][1], m[0][1]], [m[1][0], m[0][0]]]  # inversa sobre GF(2)

    dual = lat.dual
    dual_graph = _cover_graph(dual, _class_bits(lat.edges, z_basis))
    dual_best = _shortest_by_class(dual, dual_graph)
    x_cycles = []
    for j in range(2):
        target = inverse[0][j] | (inverse[1][j] << 1)
        x_cycles.append(_cycle_in_class(dual_graph, dual_best[target][1], target))

    return LogicalRepresentatives(z_cycles=z_cycles, x_cycles=tuple(x_cycles))


def code_distance(lat: CodeLattice, error_type: ErrorType = ErrorType.Z) -> int:
    """
    Peso mínimo de um ciclo homologicamente não trivial (primal para Z,
    dual para X), exato via busca em largura no recobrimento Z2 x Z2.
    """
    z_basis, x_basis = _tree_cotree(lat)
    if ErrorType(error_type) == ErrorType.Z:
        view, basis = lat, x_basis
    else:
        view, basis = lat.dual, z_basis
    graph = _cover_graph(view, _class_bits(lat.edges, basis))
    best = _shortest_by_class(view, graph)
    return min(weight for weight, _ in best.values())
