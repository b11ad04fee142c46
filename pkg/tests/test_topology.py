# tests/test_topology.py
import pytest

from app.core.decoding import decoding_graph, Sector
from app.core.exceptions import ConfigError, IllegalActionError, InvariantViolation
from app.core.topology import (
    ErrorType,
    apply_action,
    apply_actions,
    build_torus_grid,
    canonical_percept,
    check_invariants,
    code_distance,
    dual_view,
    enumerate_actions,
    logical_representatives,
)
from app.models.lattice import Action, CodeLattice


def first_split(lat: CodeLattice, v: int) -> Action:
    return next(a for a in enumerate_actions(lat) if a.d == 0 and a.v == v)


def test_root_counts(root):
    assert len(root.vertices) == 9
    assert root.n_edges == 18
    assert len(root.faces) == 9
    assert all(root.vertex_degree(v) == 4 for v in root.vertices)
    assert all(root.face_degree(f) == 4 for f in root.faces)
    assert root.qubits_added == 0
    check_invariants(root)


def test_small_grid_rejected():
    with pytest.raises(ConfigError):
        build_torus_grid(2, 3)


def test_faces_four_and_five_share_one_edge(root):
    assert set(root.face_edges(4)) & set(root.face_edges(5)) == {11}


@pytest.mark.parametrize("depth", [0, 1, 2])
def test_dual_view_is_involution(root, depth):
    lat = root
    for k in range(depth):
        lat = apply_action(lat, enumerate_actions(lat)[7 * k + 3])
    back = dual_view(dual_view(lat))
    assert back.opposite == lat.opposite
    assert tuple(back.next_around_vertex) == tuple(lat.next_around_vertex)
    assert back.vertex_of == lat.vertex_of
    assert back.face_of == lat.face_of
    assert canonical_percept(back) == canonical_percept(lat)


def test_dual_view_swaps_vertices_and_faces(root):
    lat = apply_action(root, next(a for a in enumerate_actions(root) if a.d == 1))
    dual = dual_view(lat)
    check_invariants(dual)
    assert dual.vertices == lat.faces
    assert dual.faces == lat.vertices
    assert dual.edges == lat.edges
    for e in lat.edges:
        assert dual.edge_endpoints[e] == lat.edge_faces[e]
        assert dual.edge_faces[e] == lat.edge_endpoints[e]
    assert sorted(dual.vertex_degree(f) for f in dual.vertices) == sorted(lat.face_degree(f) for f in lat.faces)
    # Divisão de plaqueta vira divisão de vértice na visão dual
    assert len(dual.vertices) == 10 and len(dual.faces) == 9


def test_root_has_36_sorted_actions(root):
    actions = enumerate_actions(root)
    assert len(actions) == 36
    assert sum(a.d == 0 for a in actions) == 18
    assert [a.key() for a in actions] == sorted(a.key() for a in actions)
    assert all(a.p1 < a.p2 for a in actions)


def test_apply_action_adds_one_qubit(root):
    action = enumerate_actions(root)[0]
    child = apply_action(root, action)
    assert child.n_edges == 19
    assert child.qubits_added == 1
    assert len(child.vertices) == 10
    assert 9 in child.vertices
    check_invariants(child)
    # O reticulado original não é alterado
    assert root.n_edges == 18


def test_face_split_adds_face(root):
    action = next(a for a in enumerate_actions(root) if a.d == 1)
    child = apply_action(root, action)
    assert len(child.faces) == 10
    assert len(child.vertices) == 9
    check_invariants(child)


def test_every_child_of_root_is_valid(root):
    for action in enumerate_actions(root):
        check_invariants(apply_action(root, action))


def test_illegal_action_rejected(root):
    # Faces 0 e 2 ocupam cantos consecutivos do vértice 0
    with pytest.raises(IllegalActionError):
        apply_action(root, Action(d=0, v=0, p1=0, p2=2))
    with pytest.raises(IllegalActionError):
        apply_action(root, Action(d=0, v=42, p1=0, p2=8))


def test_broken_map_detected(root):
    data = root.model_dump()
    face_of = list(data["face_of"])
    face_of[0] = 99
    data["face_of"] = tuple(face_of)
    with pytest.raises(InvariantViolation):
        check_invariants(CodeLattice(**data))


def test_root_distances(root):
    assert code_distance(root, ErrorType.Z) == 3
    assert code_distance(root, ErrorType.X) == 3


def test_diagonal_splits_raise_z_distance(root):
    lat = root
    for v in (0, 4, 8):
        lat = apply_action(lat, first_split(lat, v))
    assert lat.n_edges == 21
    assert code_distance(lat, ErrorType.Z) == 4

    lat = apply_action(lat, first_split(lat, 1))
    assert lat.n_edges == 22
    assert code_distance(lat, ErrorType.Z) == 4


def test_single_split_keeps_distance(root):
    child = apply_action(root, first_split(root, 0))
    assert code_distance(child, ErrorType.Z) == 3


def test_logical_representatives_pairing(root):
    reps = logical_representatives(root)
    for i, z in enumerate(reps.z_cycles):
        assert len(z) == 3
        for j, x in enumerate(reps.x_cycles):
            assert len(z & x) % 2 == (1 if i == j else 0)


def test_logical_representatives_are_cycles(root):
    child = apply_actions(root, [first_split(root, 0)])
    reps = logical_representatives(child)
    for z in reps.z_cycles:
        assert decoding_graph(child, Sector.Z).defects_of(z) == []
    for x in reps.x_cycles:
        assert decoding_graph(child, Sector.X).defects_of(x) == []


def test_percept_is_deterministic(root):
    assert canonical_percept(root) == canonical_percept(build_torus_grid(3, 3))
    assert len(canonical_percept(root).digest) == 32


def test_children_have_distinct_percepts(root):
    digests = {canonical_percept(apply_action(root, a)).digest for a in enumerate_actions(root)}
    assert len(digests) == 36
    assert canonical_percept(root).digest not in digests
