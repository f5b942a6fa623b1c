import pytest

from services.cache_manager import CacheManager


def test_keys_are_stable_and_order_independent():
    first = CacheManager.compute_key({"r": 5, "generators": ["a", "b"]})
    second = CacheManager.compute_key({"generators": ["a", "b"], "r": 5})
    assert first == second
    assert len(first) == 64
    assert first != CacheManager.compute_key({"r": 7, "generators": ["a", "b"]})


def test_enumeration_key_covers_every_input():
    base = CacheManager.enumeration_key("gens: x\nrel: x^3", [], "hlt", {"max_cosets": 10})
    assert base != CacheManager.enumeration_key("gens: x\nrel: x^3", [], "felsch", {"max_cosets": 10})
    assert base != CacheManager.enumeration_key("gens: x\nrel: x^3", ["x"], "hlt", {"max_cosets": 10})
    assert base != CacheManager.enumeration_key("gens: x\nrel: x^3", [], "hlt", {"max_cosets": 11})


def test_group_order_round_trip(cache):
    assert cache.get_group_order(5, ["[[1, 0], [1, 1]]"]) is None
    assert cache.set_group_order(5, ["[[1, 0], [1, 1]]"], 120)
    assert cache.get_group_order(5, ["[[1, 0], [1, 1]]"]) == 120
    assert cache.stats["hits"] == 1
    assert cache.stats["misses"] == 1


def test_identical_payload_is_not_rewritten(cache):
    key = CacheManager.compute_key("k")
    assert cache.set("group_orders", key, 24)
    assert not cache.set("group_orders", key, 24)
    assert cache.stats["no_changes"] == 1
    assert cache.set("group_orders", key, 24, force=True)
    assert cache.set("group_orders", key, 48)
    assert cache.get("group_orders", key) == 48


def test_only_completed_enumerations_are_stored(cache):
    key = CacheManager.compute_key("enum")
    assert not cache.set_enumeration(key, {"status": "limit-exceeded", "index": None})
    assert cache.get_enumeration(key) is None
    assert cache.set_enumeration(key, {"status": "completed", "index": 24})
    assert cache.get_enumeration(key)["index"] == 24


def test_unknown_category(cache):
    with pytest.raises(ValueError):
        cache.get("orbits", "key")


def test_clear(cache):
    key = CacheManager.compute_key("x")
    cache.set("group_orders", key, 6)
    assert cache.clear_category("group_orders") == 2
    assert cache.get("group_orders", key) is None
    cache.set_group_order(3, ["g"], 24)
    cache.set_enumeration(key, {"status": "completed", "index": 6})
    # one payload and one metadata file each
    assert cache.clear_all_cache() == 4
    assert cache.get_cache_statistics()["categories"]["group_orders"]["count"] == 0


def test_statistics(cache):
    cache.set_group_order(3, ["g"], 24)
    cache.get_group_order(3, ["g"])
    cache.get_group_order(5, ["g"])
    stats = cache.get_cache_statistics()
    assert stats["categories"]["group_orders"]["count"] == 1
    assert stats["performance"]["hit_rate"] == 50.0
    assert stats["performance"]["updates"] == 1
