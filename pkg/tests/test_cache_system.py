# tests/test_cache_system.py
from app.core.decoding import Sector, decoding_graph
from app.core.estimation import estimate_logical_rate
from app.core.noise import dephasing_profile
from app.core.topology import apply_action, enumerate_actions
from app.utils.cache_system import LRUCache, generate_cache_key, rank_memo


def test_lru_eviction():
    cache = LRUCache(max_size=2)
    cache.set("a", 1)
    cache.set("b", 2)
    assert cache.get("a") == 1
    cache.set("c", 3)
    assert "b" not in cache
    assert "a" in cache and "c" in cache
    assert len(cache) == 2


def test_resize_drops_oldest():
    cache = LRUCache(max_size=10)
    for k in range(5):
        cache.set(f"key{k}", k)
    cache.resize(3)
    assert len(cache) == 3
    assert "key0" not in cache and "key1" not in cache
    assert cache.get("key4") == 4


def test_cache_key_ignores_seed():
    a = generate_cache_key("estimate", digest="d", trials=10, seed=1)
    b = generate_cache_key("estimate", digest="d", trials=10, seed=2)
    c = generate_cache_key("estimate", digest="d", trials=20, seed=1)
    assert a == b
    assert a != c


def test_rank_memo_is_shared_and_bounded(root):
    rank_memo.resize(64)
    try:
        profile = dephasing_profile(0.3)
        lattices = [root] + [apply_action(root, a) for a in enumerate_actions(root)[:5]]
        for lat in lattices:
            estimate_logical_rate(lat, profile, trials=2000, seed=1, convention="z_only", threads=1)
            assert len(rank_memo) <= 64
        digests = {key[0] for key in rank_memo.cache}
        # Entradas de vários reticulados convivem no mesmo memo
        assert decoding_graph(lattices[-1], Sector.Z).digest in digests
        assert all(key[1] == "Z" for key in rank_memo.cache)
    finally:
        rank_memo.resize(100_000)
