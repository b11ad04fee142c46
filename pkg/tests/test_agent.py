# tests/test_agent.py
import numpy as np
import pytest

from app.core.exceptions import InvariantViolation, TerminalPerceptError
from app.core.topology import apply_action, canonical_percept, enumerate_actions
from app.models.lattice import Action, Percept
from app.schemas.training import AgentHyper
from app.services.agent import ClipNetwork


def fake_percept(name: str) -> Percept:
    return Percept(canonical_bytes=name.encode(), digest=name)


def actions(n: int):
    return [Action(d=0, v=i, p1=0, p2=1) for i in range(n)]


@pytest.fixture
def net():
    return ClipNetwork(AgentHyper(beta=2.0, eta=0.1, gamma=0.0, delta=0.01, tau=2), reset_glow=False)


def test_root_percept_has_uniform_policy(root, net):
    available = enumerate_actions(root)
    i = net.perceive(canonical_percept(root), available)
    assert i == 0
    assert net.m0 == 36
    assert np.allclose(net.policy(i), 1 / 36)
    assert net.perceive(canonical_percept(root), available) == 0
    assert net.n_percepts == 1


def test_percept_count(net):
    for k in range(5):
        net.perceive(fake_percept(f"p{k}"), actions(3))
    assert net.n_percepts == 5


def test_empty_action_set_rejected(net):
    with pytest.raises(TerminalPerceptError):
        net.perceive(fake_percept("dead"), [])


def test_softmax_ratio(net):
    i = net.perceive(fake_percept("root"), actions(4))
    assert np.allclose(net.policy(i), 0.25)
    net.clip(i).h[:] = [2.0, 1.0, 1.0, 1.0]
    p = net.policy(i)
    assert p[0] / p[1] == pytest.approx(np.e ** 2)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_policy_is_shift_invariant(net):
    i = net.perceive(fake_percept("root"), actions(3))
    net.clip(i).h[:] = [1.0, 2.0, 3.5]
    before = net.policy(i)
    net.clip(i).h += 10.0
    assert np.allclose(net.policy(i), before)


def test_glow_is_ratio_to_root(net):
    root = net.perceive(fake_percept("root"), actions(4))
    rng = np.random.default_rng(0)
    j = net.select_action(root, rng)
    assert net.clip(root).g[j] == 1.0
    other = net.perceive(fake_percept("child"), actions(2))
    k = net.select_action(other, rng)
    assert net.clip(other).g[k] == 0.5


def test_update_arithmetic():
    net = ClipNetwork(AgentHyper(eta=0.1, gamma=0.01), reset_glow=False)
    i = net.perceive(fake_percept("root"), actions(3))
    clip = net.clip(i)
    clip.h[:] = [1.0, 3.0, 1.0]
    clip.g[:] = [1.0, 0.0, 0.0]
    net.update(1.0)
    assert clip.h[0] == pytest.approx(2.0)
    assert clip.h[1] == pytest.approx(2.98)
    assert clip.h[2] == pytest.approx(1.0)
    assert clip.g[0] == pytest.approx(0.9)


def test_update_without_reward_or_forgetting(net):
    i = net.perceive(fake_percept("root"), actions(2))
    net.clip(i).h[:] = [1.5, 1.0]
    net.clip(i).g[:] = [1.0, 0.5]
    for _ in range(3):
        net.update(0.0)
    assert np.allclose(net.clip(i).h, [1.5, 1.0])
    assert np.allclose(net.clip(i).g, np.array([1.0, 0.5]) * 0.9 ** 3)


def test_h_floor():
    net = ClipNetwork(AgentHyper(gamma=0.5), reset_glow=False)
    i = net.perceive(fake_percept("root"), actions(2))
    for _ in range(10):
        net.update(0.0)
        assert net.clip(i).h.min() >= 1.0


def test_negative_reward_rejected(net):
    with pytest.raises(InvariantViolation):
        net.update(-1.0)


def test_unrewarded_trial_drops_new_clips(net):
    net.perceive(fake_percept("root"), actions(3), trial=0)
    net.end_trial(True, 0)
    for k in range(5):
        net.perceive(fake_percept(f"new{k}"), actions(3), trial=1)
    removed = net.end_trial(False, 1)
    assert len(removed) == 5
    assert net.n_percepts == 1
    assert "root" in net


def test_rewarded_trial_keeps_new_clips(net):
    net.perceive(fake_percept("root"), actions(3))
    net.perceive(fake_percept("child"), actions(3))
    assert net.end_trial(True, 0) == []
    assert net.n_percepts == 2
    assert net.clip(net.index_of("child")).rewarded_count == 1


def test_stale_clip_deleted_after_immunity(net):
    net.perceive(fake_percept("root"), actions(3))
    net.perceive(fake_percept("flat"), actions(3))
    useful = net.perceive(fake_percept("useful"), actions(2))
    net.clip(useful).h[:] = [2.0, 1.0]
    # tau = 2: apagado na terceira tentativa recompensada
    assert net.end_trial(True, 0) == []
    assert net.end_trial(True, 1) == []
    removed = net.end_trial(True, 2)
    assert removed == [1]
    assert "flat" not in net
    assert "useful" in net
    assert "root" in net


def test_reset_glow_flag():
    net = ClipNetwork(AgentHyper(), reset_glow=True)
    i = net.perceive(fake_percept("root"), actions(2))
    net.select_action(i, np.random.default_rng(0))
    net.end_trial(True, 0)
    assert not net.clip(i).g.any()


def test_snapshot_round_trip_preserves_policy(root, net):
    rng = np.random.default_rng(1)
    lat = root
    for _ in range(3):
        available = enumerate_actions(lat)
        i = net.perceive(canonical_percept(lat), available)
        j = net.select_action(i, rng)
        lat = apply_action(lat, net.action_of(i, j))
        net.update(0.0)
    net.update(1.0)
    net.end_trial(True, 0)

    restored = ClipNetwork.from_snapshot(net.snapshot())
    assert restored.n_percepts == net.n_percepts
    assert restored.m0 == net.m0
    for digest, index in net.by_digest.items():
        assert np.allclose(restored.policy(restored.index_of(digest)), net.policy(index))


def test_same_seed_same_choices(net):
    i = net.perceive(fake_percept("root"), actions(6))
    twin = net.clone()
    rng_a, rng_b = np.random.default_rng(3), np.random.default_rng(3)
    assert [net.select_action(i, rng_a) for _ in range(20)] == [twin.select_action(i, rng_b) for _ in range(20)]


@pytest.mark.slow
def test_policy_stays_normalized_over_long_run(root):
    net = ClipNetwork(AgentHyper(beta=2.0, eta=0.1, gamma=0.001, delta=0.01, tau=2), reset_glow=False)
    rng = np.random.default_rng(11)
    indices = [net.perceive(canonical_percept(root), enumerate_actions(root))]
    indices += [net.perceive(fake_percept(f"p{k}"), actions(2 + k % 7)) for k in range(15)]
    for step in range(100_000):
        i = indices[int(rng.integers(len(indices)))]
        net.select_action(i, rng)
        net.update(float(rng.random() < 0.05))
        if step % 10_000 == 0:
            for k in indices:
                assert net.policy(k).sum() == pytest.approx(1.0, abs=1e-12)
    for k in indices:
        assert net.policy(k).sum() == pytest.approx(1.0, abs=1e-12)
        assert net.clip(k).h.min() >= 1.0
        assert np.isfinite(net.clip(k).h).all()
