# app/models/lattice.py
from functools import cached_property
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field


class Action(BaseModel):
    """Movimento de deformação a=(d, v, p1, p2)"""
    model_config = ConfigDict(frozen=True)

    d: int = Field(..., ge=0, le=1)  # 0 = divide vértice primal, 1 = divide plaqueta
    v: int = Field(..., ge=0)
    p1: int = Field(..., ge=0)
    p2: int = Field(..., ge=0)

    def key(self) -> Tuple[int, int, int, int]:
        return (self.d, self.v, self.p1, self.p2)


class Percept(BaseModel):
    """Codificação canônica de um reticulado"""
    model_config = ConfigDict(frozen=True)

    canonical_bytes: bytes
    digest: str


class CodeLattice(BaseModel):
    """
    Mapa combinatório de um grafo mergulhado no toro.

    Cada dart (meia-aresta) tem um `opposite` (o outro dart da mesma aresta)
    e um `next_around_vertex` (sucessor na rotação do seu vértice). As faces
    são as órbitas de next_around_vertex ∘ opposite. Cada aresta é um qubit
    de dados.
    """
    model_config = ConfigDict(frozen=True)

    opposite: Tuple[int, ...]
    next_around_vertex: Tuple[int, ...]
    vertex_of: Tuple[int, ...]
    face_of: Tuple[int, ...]
    edge_of: Tuple[int, ...]
    n_initial_qubits: int = 18

    # Estruturas derivadas (calculadas sob demanda)

    @property
    def n_darts(self) -> int:
        return len(self.opposite)

    @cached_property
    def edges(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.edge_of)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def vertices(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.vertex_of)))

    @cached_property
    def faces(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.face_of)))

    @property
    def qubits_added(self) -> int:
        return self.n_edges - self.n_initial_qubits

    @cached_property
    def face_next(self) -> Tuple[int, ...]:
        """Permutação de faces: phi(d) = next_around_vertex(opposite(d))"""
        return tuple(self.next_around_vertex[self.opposite[d]] for d in range(self.n_darts))

    def _orbits(self, perm: Tuple[int, ...], labels: Tuple[int, ...]) -> Dict[int, Tuple[int, ...]]:
        # Cada órbita começa no dart de menor aresta
        seen = [False] * self.n_darts
        orbits: Dict[int, Tuple[int, ...]] = {}
        for start in range(self.n_darts):
            if seen[start]:
                continue
            orbit: List[int] = []
            d = start
            while not seen[d]:
                seen[d] = True
                orbit.append(d)
                d = perm[d]
            pivot = min(range(len(orbit)), key=lambda i: (self.edge_of[orbit[i]], orbit[i]))
            orbit = orbit[pivot:] + orbit[:pivot]
            label = labels[orbit[0]]
            if label in orbits:
                # Rótulo repetido em órbitas diferentes: guardado sob chave negativa para o validador
                orbits[-1 - len(orbits)] = tuple(orbit)
            else:
                orbits[label] = tuple(orbit)
        return orbits

    @cached_property
    def rotations(self) -> Dict[int, Tuple[int, ...]]:
        """Rotação de darts em cada vértice, começando pela menor aresta"""
        return self._orbits(self.next_around_vertex, self.vertex_of)

    @cached_property
    def boundaries(self) -> Dict[int, Tuple[int, ...]]:
        """Fronteira de cada face (órbita da permutação de faces)"""
        return self._orbits(self.face_next, self.face_of)

    def vertex_degree(self, v: int) -> int:
        return len(self.rotations[v])

    def face_degree(self, f: int) -> int:
        return len(self.boundaries[f])

    @cached_property
    def edge_darts(self) -> Dict[int, Tuple[int, int]]:
        pairs: Dict[int, Tuple[int, int]] = {}
        for d in range(self.n_darts):
            e = self.edge_of[d]
            if e not in pairs:
                pairs[e] = (d, self.opposite[d])
        return pairs

    @cached_property
    def edge_endpoints(self) -> Dict[int, Tuple[int, int]]:
        return {e: (self.vertex_of[a], self.vertex_of[b]) for e, (a, b) in self.edge_darts.items()}

    @cached_property
    def edge_faces(self) -> Dict[int, Tuple[int, int]]:
        return {e: (self.face_of[a], self.face_of[b]) for e, (a, b) in self.edge_darts.items()}

    def vertex_edges(self, v: int) -> Tuple[int, ...]:
        """N(v): arestas incidentes a v, na ordem da rotação"""
        return tuple(self.edge_of[d] for d in self.rotations[v])

    def face_edges(self, f: int) -> Tuple[int, ...]:
        """N(p): arestas da fronteira da face p"""
        return tuple(self.edge_of[d] for d in self.boundaries[f])

    @cached_property
    def face_adjacency(self) -> Dict[int, frozenset]:
        adjacency: Dict[int, set] = {f: set() for f in self.faces}
        for f, g in self.edge_faces.values():
            if f != g:
                adjacency[f].add(g)
                adjacency[g].add(f)
        return {f: frozenset(n) for f, n in adjacency.items()}

    @cached_property
    def dual(self) -> "CodeLattice":
        """
        Visão dual: vértices viram faces e vice-versa, mesmas arestas.

        A rotação dual é a permutação de faces; como phi* ∘ opposite = sigma,
        a dual da dual recupera o reticulado original.
        """
        return CodeLattice.model_construct(
            opposite=self.opposite,
            next_around_vertex=self.face_next,
            vertex_of=self.face_of,
            face_of=self.vertex_of,
            edge_of=self.edge_of,
            n_initial_qubits=self.n_initial_qubits,
        )

    def stabilizer_counts(self) -> Tuple[int, int]:
        """(#estabilizadores X = vértices, #estabilizadores Z = faces)"""
        return len(self.vertices), len(self.faces)
