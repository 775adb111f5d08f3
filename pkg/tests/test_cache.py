import numpy as np
import pytest

from bltails.cache import DiskCache, make_key


def test_key_depends_on_every_part():
    base = make_key(coeff="abc", n=np.array([0.6, 0.8]), tol=1e-10)
    assert base == make_key(tol=1e-10, coeff="abc", n=np.array([0.6, 0.8]))
    assert base != make_key(coeff="abc", n=np.array([0.6, 0.8]), tol=1e-9)
    assert base != make_key(coeff="abc", n=np.array([0.6, 0.8000000000000002]), tol=1e-10)


def test_roundtrip_bit_identical(tmp_path):
    c = DiskCache(tmp_path)
    arr = np.random.default_rng(0).normal(size=(3, 4))
    c.put("k", {"a": arr})
    assert np.array_equal(c.get("k")["a"], arr)
    assert c.stats() == {"hits": 1, "misses": 0}


def test_corrupt_entry_evicted(tmp_path):
    c = DiskCache(tmp_path)
    c.put("k", {"a": np.ones(3)})
    path = tmp_path / "k.npz"
    raw = bytearray(path.read_bytes())
    raw[-5] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.warns(UserWarning, match="corrupt"):
        assert c.get("k") is None
    assert not path.exists()


def test_clear_and_disabled(tmp_path):
    c = DiskCache(tmp_path)
    c.put("k", {"a": np.ones(1)})
    c.clear()
    assert c.get("k") is None
    off = DiskCache(tmp_path / "off", enabled=False)
    off.put("k", {"a": np.ones(1)})
    assert off.get("k") is None and not (tmp_path / "off").exists()
