"""On-disk cache of eigendecompositions.

File layout (all integers little-endian):

    8 bytes   magic  b"ANHCACHE"
    4 bytes   uint32 format version
    8 bytes   uint64 header length H
    H bytes   UTF-8 JSON header
    payload   float64 arrays, little-endian, C order, in header["arrays"] order

The header holds the spec, basis tag, N, trusted_count, array shapes and the
sha256 of the payload bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .oscillator import (GridBasis, HermiteBasis, OscillatorSpec, SpectralDecomposition,
                         SynthesisGrid)

MAGIC = b"ANHCACHE"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")
ENV_VAR = "ANHARMONIC_CACHE"
_ARRAYS = ("eigenvalues", "eigenvectors", "drift", "grid_x", "grid_weights", "grid_modes")


class CacheError(RuntimeError):
    pass


class ChecksumError(CacheError):
    pass


class VersionError(CacheError):
    pass


def cache_root(flag: str | os.PathLike | None = None) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "anharmonic"


def _basis_dict(basis):
    if isinstance(basis, HermiteBasis):
        return {"tag": "hermite", "N": basis.N, "scale": basis.scale}
    return {"tag": "grid", "L": basis.L, "M": basis.M}


def _basis_from(h):
    if h["tag"] == "hermite":
        return HermiteBasis(int(h["N"]), float(h["scale"]))
    if h["tag"] == "grid":
        return GridBasis(float(h["L"]), int(h["M"]))
    raise CacheError(f"unknown basis tag {h['tag']!r}")


def cache_key(spec: OscillatorSpec, basis, refine: int = 2) -> dict:
    """Everything that determines the eigendecomposition (gamma does not)."""
    return {"k": spec.k, "ell": spec.ell, "dim": spec.dim, "basis": _basis_dict(basis),
            "refine": int(refine)}


def cache_filename(key: dict) -> str:
    blob = json.dumps(key, sort_keys=True).encode()
    b = key["basis"]
    size = b.get("N", b.get("M"))
    return f"k{key['k']}_l{key['ell']}_{b['tag']}{size}_{hashlib.sha256(blob).hexdigest()[:20]}.anh"


def _arrays(d: SpectralDecomposition):
    drift = d.drift if d.drift is not None else np.empty(0)
    return dict(zip(_ARRAYS, (d.eigenvalues, d.eigenvectors, drift, d.grid.x,
                              d.grid.weights, d.grid.modes)))


def save(d: SpectralDecomposition, path, refine: int = 2) -> Path:
    """Write ``d`` atomically (temp file in the target directory, then rename)."""
    path = Path(path)
    arrays = {name: np.ascontiguousarray(a, dtype="<f8") for name, a in _arrays(d).items()}
    payload = b"".join(a.tobytes() for a in arrays.values())
    header = {
        "format_version": FORMAT_VERSION,
        "spec": {"k": d.spec.k, "ell": d.spec.ell, "gamma": d.spec.gamma, "dim": d.spec.dim},
        "key": cache_key(d.spec, d.basis, refine),
        "N": d.basis.size,
        "trusted_count": int(d.trusted_count),
        "has_drift": d.drift is not None,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays.items()],
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        with os.fdopen(fd, "wb") as fh:
            fh.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(hbytes)))
            fh.write(hbytes)
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        raise CacheError(f"cannot write cache file {path}: {exc}") from exc
    return path


def read_header(path) -> dict:
    path = Path(path)
    with open(path, "rb") as fh:
        return _read_header(fh, path)


def _read_header(fh, path):
    raw = fh.read(_PREFIX.size)
    if len(raw) != _PREFIX.size:
        raise CacheError(f"{path}: truncated header")
    magic, version, hlen = _PREFIX.unpack(raw)
    if magic != MAGIC:
        raise CacheError(f"{path}: not an anharmonic cache file")
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: format version {version}, reader expects {FORMAT_VERSION}")
    header = json.loads(fh.read(hlen).decode())
    if header.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"{path}: header version {header.get('format_version')} "
                           f"does not match reader version {FORMAT_VERSION}")
    return header


def load(path, spec: OscillatorSpec | None = None) -> SpectralDecomposition:
    """Read a cache file. ``spec`` may override gamma (k and ell must match)."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            header = _read_header(fh, path)
            payload = fh.read()
    except OSError as exc:
        raise CacheError(f"cannot read cache file {path}: {exc}") from exc
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise ChecksumError(f"{path}: payload checksum mismatch")
    arrays, off = {}, 0
    for item in header["arrays"]:
        shape = tuple(item["shape"])
        count = int(np.prod(shape)) if shape else 1
        arrays[item["name"]] = np.frombuffer(payload, "<f8", count, off).reshape(shape).astype(float)
        off += 8 * count
    if off != len(payload):
        raise CacheError(f"{path}: payload length does not match header")
    s = header["spec"]
    stored = OscillatorSpec(int(s["k"]), int(s["ell"]), float(s["gamma"]), int(s["dim"]))
    if spec is not None:
        if (spec.k, spec.ell, spec.dim) != (stored.k, stored.ell, stored.dim):
            raise CacheError(f"{path}: cached (k, ell)=({stored.k}, {stored.ell}) "
                             f"does not match requested ({spec.k}, {spec.ell})")
        stored = spec
    grid = SynthesisGrid(arrays["grid_x"], arrays["grid_weights"], arrays["grid_modes"])
    return SpectralDecomposition(
        stored, _basis_from(header["key"]["basis"]), arrays["eigenvalues"],
        arrays["eigenvectors"], int(header["trusted_count"]), grid,
        arrays["drift"] if header.get("has_drift") else None)


def lookup(spec: OscillatorSpec, basis, root=None, refine: int = 2) -> Path | None:
    """Path of the cache entry for (spec, basis) if it exists, else None."""
    path = cache_root(root) / cache_filename(cache_key(spec, basis, refine))
    return path if path.is_file() else None


def entry_path(spec: OscillatorSpec, basis, root=None, refine: int = 2) -> Path:
    return cache_root(root) / cache_filename(cache_key(spec, basis, refine))


def clean(root=None) -> int:
    """Remove every cache file (and stale temp files) under the root."""
    r = cache_root(root)
    removed = 0
    if not r.is_dir():
        return 0
    for p in list(r.glob("*.anh")) + list(r.glob("*.tmp")):
        p.unlink()
        removed += 1
    return removed


class CacheMiss(CacheError):
    pass


def cached_decomposition(spec: OscillatorSpec, basis, root=None, no_compute: bool = False,
                         use_cache: bool = True, refine: int = 2,
                         n_modes: int | None = None) -> SpectralDecomposition:
    """Decomposition for ``basis`` from the cache, computing and saving on a miss."""
    from .oscillator import _assemble, eigendecompose

    if use_cache or no_compute:
        hit = lookup(spec, basis, root, refine)
        if hit is not None:
            return load(hit, spec)
        if no_compute:
            tag = _basis_dict(basis)
            raise CacheMiss(f"no cached decomposition for k={spec.k}, ell={spec.ell}, {tag} "
                            f"under {cache_root(root)}")
    d = eigendecompose(_assemble(spec, basis), n_modes, refine=refine)
    if use_cache:
        save(d, entry_path(spec, basis, root, refine), refine)
    return d


def cached_spectrum(spec: OscillatorSpec, N: int, root=None, no_compute: bool = False,
                    use_cache: bool = True, refine: int = 2) -> SpectralDecomposition:
    """Hermite decomposition at the balanced scale, through the cache."""
    from .oscillator import balanced_scale

    return cached_decomposition(spec, HermiteBasis(N, balanced_scale(spec, N)), root,
                                no_compute, use_cache, refine)
