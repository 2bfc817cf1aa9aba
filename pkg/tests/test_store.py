import numpy as np
import pytest

from anharmonic import store
from anharmonic.oscillator import (GridBasis, HermiteBasis, OscillatorSpec, assemble_grid,
                                   balanced_scale, eigendecompose, solve_spectrum)


@pytest.fixture(scope="module")
def quartic64():
    return solve_spectrum(OscillatorSpec(2, 1), 64)


def _same(a, b):
    assert a.spec == b.spec and a.basis == b.basis and a.trusted_count == b.trusted_count
    for x, y in ((a.eigenvalues, b.eigenvalues), (a.eigenvectors, b.eigenvectors),
                 (a.grid.x, b.grid.x), (a.grid.weights, b.grid.weights),
                 (a.grid.modes, b.grid.modes), (a.drift, b.drift)):
        assert np.array_equal(x, y)


def test_round_trip_exact(tmp_path, quartic64):
    p = store.save(quartic64, tmp_path / "q.anh")
    _same(store.load(p), quartic64)


def test_round_trip_grid_basis(tmp_path):
    d = eigendecompose(assemble_grid(OscillatorSpec(1, 1), 8.0, 200), n_modes=6)
    _same(store.load(store.save(d, tmp_path / "g.anh")), d)


def test_layout_is_documented(tmp_path, quartic64):
    p = store.save(quartic64, tmp_path / "q.anh")
    raw = p.read_bytes()
    assert raw[:8] == b"ANHCACHE"
    assert int.from_bytes(raw[8:12], "little") == store.FORMAT_VERSION
    h = store.read_header(p)
    assert h["trusted_count"] == quartic64.trusted_count and h["N"] == 64
    hlen = int.from_bytes(raw[12:20], "little")
    payload = raw[20 + hlen:]
    ev = np.frombuffer(payload[: 8 * 64], "<f8")
    assert np.array_equal(ev, quartic64.eigenvalues)


def test_corrupted_payload(tmp_path, quartic64):
    p = store.save(quartic64, tmp_path / "q.anh")
    raw = bytearray(p.read_bytes())
    raw[-5] ^= 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(store.ChecksumError):
        store.load(p)


def test_version_mismatch(tmp_path, quartic64):
    p = store.save(quartic64, tmp_path / "q.anh")
    raw = bytearray(p.read_bytes())
    raw[8:12] = (store.FORMAT_VERSION + 1).to_bytes(4, "little")
    p.write_bytes(bytes(raw))
    with pytest.raises(store.VersionError):
        store.load(p)


def test_not_a_cache_file(tmp_path):
    p = tmp_path / "x.anh"
    p.write_bytes(b"hello world, definitely not a cache file")
    with pytest.raises(store.CacheError):
        store.load(p)


def test_io_error_has_path(tmp_path):
    missing = tmp_path / "nope.anh"
    with pytest.raises(store.CacheError, match="nope.anh"):
        store.load(missing)


def test_lookup_hit_and_miss(tmp_path, quartic64):
    spec = quartic64.spec
    assert store.lookup(spec, quartic64.basis, tmp_path) is None
    store.save(quartic64, store.entry_path(spec, quartic64.basis, tmp_path))
    assert store.lookup(spec, quartic64.basis, tmp_path) is not None
    other = HermiteBasis(128, balanced_scale(spec, 128))
    assert store.lookup(spec, other, tmp_path) is None


def test_env_override(tmp_path, monkeypatch, quartic64):
    spec = quartic64.spec
    old, new = tmp_path / "old", tmp_path / "new"
    store.save(quartic64, store.entry_path(spec, quartic64.basis, old))
    old.rename(new)
    monkeypatch.setenv(store.ENV_VAR, str(new))
    assert store.cache_root() == new
    hit = store.lookup(spec, quartic64.basis)
    assert hit is not None and hit.parent == new
    # an explicit flag wins over the environment
    assert store.cache_root(old) == old


def test_key_injective():
    specs = [OscillatorSpec(k, ell) for k in (1, 2, 3) for ell in (1, 2, 3)]
    bases = [HermiteBasis(64), HermiteBasis(128), HermiteBasis(64, 0.7), GridBasis(5.0, 100),
             GridBasis(6.0, 100)]
    names = {store.cache_filename(store.cache_key(s, b)) for s in specs for b in bases}
    assert len(names) == len(specs) * len(bases)


def test_gamma_override(tmp_path, quartic64):
    p = store.save(quartic64, tmp_path / "q.anh")
    d = store.load(p, OscillatorSpec(2, 1, 0.5))
    assert d.spec.gamma == 0.5
    with pytest.raises(store.CacheError):
        store.load(p, OscillatorSpec(1, 1))


def test_cached_spectrum_and_clean(tmp_path):
    spec = OscillatorSpec(1, 2)
    with pytest.raises(store.CacheMiss):
        store.cached_spectrum(spec, 64, tmp_path, no_compute=True)
    d1 = store.cached_spectrum(spec, 64, tmp_path)
    d2 = store.cached_spectrum(spec, 64, tmp_path, no_compute=True)
    _same(d1, d2)
    assert store.clean(tmp_path) == 1
    assert list(tmp_path.iterdir()) == []


def test_no_temp_files_left(tmp_path, quartic64):
    store.save(quartic64, tmp_path / "a.anh")
    assert [p.name for p in tmp_path.iterdir()] == ["a.anh"]
