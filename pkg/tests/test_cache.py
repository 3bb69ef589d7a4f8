import logging
from pathlib import Path

import pytest

import depthlab.cache
from depthlab.cache import (
    CACHE_ENV_VAR,
    DEFAULT_CACHE_DIR,
    CacheEntry,
    CacheKey,
    File,
    Memory,
    cache_directory,
    ilfst_list,
)
from depthlab.errors import ConfigError
from depthlab.fst import enumerate_ilfsts


@pytest.fixture
def machines_k2_l1():
    return list(enumerate_ilfsts(2, 1))


def test_key_filename():
    assert CacheKey(3, 1).filename == "ilfst-k3-l1-v1.cache"


def test_entry_round_trip(machines_k2_l1):
    entry = CacheEntry.from_machines(CacheKey(2, 1), machines_k2_l1)
    assert entry.verify()
    assert entry.machines() == machines_k2_l1


def test_file_miss_then_hit(tmp_path, machines_k2_l1):
    cache = File(tmp_path / "cache")
    key = CacheKey(2, 1)
    assert cache.lookup(key) is None
    assert not cache.asset_exists(key)

    assert ilfst_list(2, 1, cache) == machines_k2_l1
    assert cache.asset_exists(key)
    assert cache.lookup(key).machines() == machines_k2_l1
    assert ilfst_list(2, 1, cache) == machines_k2_l1
    assert not list(cache.directory.glob(".tmp-*"))


def test_file_header(tmp_path):
    cache = File(tmp_path)
    ilfst_list(1, 1, cache)
    text = cache.path(CacheKey(1, 1)).read_text()
    assert text.startswith("# format: 1\n# states: 1\n# maxout: 1\n# checksum: ")
    assert "\nstates 1\nstart 0\n" in text


def test_tampered_entry_is_regenerated(tmp_path, machines_k2_l1, caplog):
    cache = File(tmp_path)
    key = CacheKey(2, 1)
    ilfst_list(2, 1, cache)
    path = cache.path(key)
    data = bytearray(path.read_bytes())
    # flip an output bit in the last edge line
    position = data.rindex(b"edge") + len(b"edge 0 0 0 ")
    data[position] = ord("1") if data[position] == ord("0") else ord("0")
    path.write_bytes(bytes(data))

    with caplog.at_level(logging.WARNING):
        assert cache.lookup(key) is None
    assert "corrupt" in caplog.text
    assert ilfst_list(2, 1, cache) == machines_k2_l1
    assert cache.lookup(key).machines() == machines_k2_l1


@pytest.mark.parametrize(
    "header",
    [
        "# format: 2\n# states: 2\n# maxout: 1\n",
        "# format: 1\n# states: 3\n# maxout: 1\n",
        "# format: 1\n# states: 2\n",
    ],
)
def test_mismatched_header_is_a_miss(tmp_path, machines_k2_l1, header):
    cache = File(tmp_path)
    key = CacheKey(2, 1)
    entry = CacheEntry.from_machines(key, machines_k2_l1)
    cache.path(key).write_bytes(f"{header}# checksum: {entry.checksum}\n".encode() + entry.payload)
    assert cache.lookup(key) is None


def test_memory_cache(machines_k2_l1):
    cache = Memory()
    key = CacheKey(2, 1)
    assert cache.lookup(key) is None
    ilfst_list(2, 1, cache)
    assert cache.lookup(key).machines() == machines_k2_l1

    cache.entries[key] = CacheEntry(key, cache.entries[key].payload + b"\n", cache.entries[key].checksum)
    assert cache.lookup(key) is None


def test_ilfst_list_validates_before_lookup(tmp_path):
    cache = File(tmp_path)
    with pytest.raises(ConfigError):
        ilfst_list(3, 2, cache)
    assert not list(tmp_path.iterdir())


def test_cache_directory():
    assert cache_directory({}, "/explicit") == Path("/explicit")
    assert cache_directory({CACHE_ENV_VAR: "/from-env"}, "/explicit") == Path("/explicit")
    assert cache_directory({CACHE_ENV_VAR: "/from-env"}) == Path("/from-env")
    assert cache_directory({}) == Path(DEFAULT_CACHE_DIR)


def test_file_rejects_bad_directory():
    with pytest.raises(ValueError):
        File(42)


def test_hit_parses_each_machine_once(tmp_path, machines_k2_l1, monkeypatch):
    cache = File(tmp_path)
    ilfst_list(2, 1, cache)
    parsed = []
    parse_fst = depthlab.cache.parse_fst
    monkeypatch.setattr(depthlab.cache, "parse_fst", lambda block: parsed.append(block) or parse_fst(block))
    assert ilfst_list(2, 1, cache) == machines_k2_l1
    assert len(parsed) == len(machines_k2_l1)
