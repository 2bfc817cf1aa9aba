"""TOML run configuration: parse, validate and reject before any computation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .oscillator import OscillatorSpec

SECTIONS = ("oscillator", "discretization", "norms", "experiment", "output")


class ConfigError(ValueError):
    pass


def _exponent(v, name, lo=None):
    """Lebesgue exponent in (0, inf], or [lo, inf] when ``lo`` is given."""
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
        raise ConfigError(f"{name} must be a number or 'inf', got {v!r}")
    v = float(v)
    if lo is None and not v > 0:
        raise ConfigError(f"{name} must lie in (0, inf], got {v:g}")
    if lo is not None and not v >= lo:
        raise ConfigError(f"{name} must lie in [{lo:g}, inf], got {v:g}")
    return v


def _int(v, name, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{name} must be >= {lo}, got {v}")
    return v


def _float(v, name, lo=None, strict=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{name} must be a finite number, got {v!r}")
    v = float(v)
    if lo is not None and (v <= lo if strict else v < lo):
        raise ConfigError(f"{name} must be {'>' if strict else '>='} {lo:g}, got {v:g}")
    return v


def _complex(v, name):
    if isinstance(v, list):
        if len(v) != 2:
            raise ConfigError(f"{name} as a list must be [re, im]")
        return complex(_float(v[0], name), _float(v[1], name))
    return complex(_float(v, name))


@dataclass(frozen=True)
class Discretization:
    basis: str = "hermite"
    N: int = 256
    L: float | None = None
    M: int | None = None
    refine: int = 2


@dataclass(frozen=True)
class RunConfig:
    spec: OscillatorSpec
    disc: Discretization
    pairs: tuple = ()
    m: float = 0.0
    experiment: dict = field(default_factory=dict)
    out: str | None = None
    seed: int | None = None


def _check_keys(table, allowed, where):
    extra = set(table) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(extra))}")


def parse(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from exc
    return from_dict(raw)


def load(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse(text)


def from_dict(raw: dict) -> RunConfig:
    _check_keys(raw, SECTIONS, "top level")
    osc = raw.get("oscillator")
    if not isinstance(osc, dict):
        raise ConfigError("missing [oscillator] section")
    _check_keys(osc, ("k", "ell", "gamma", "dim"), "oscillator")
    try:
        spec = OscillatorSpec(_int(osc.get("k"), "oscillator.k", 1),
                              _int(osc.get("ell"), "oscillator.ell", 1),
                              _float(osc.get("gamma", 1.0), "oscillator.gamma", 0.0, strict=True),
                              _int(osc.get("dim", 1), "oscillator.dim", 1))
    except (ValueError, NotImplementedError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid oscillator: {exc}") from exc

    dd = raw.get("discretization", {})
    _check_keys(dd, ("basis", "N", "L", "M", "refine"), "discretization")
    basis = dd.get("basis", "hermite")
    if basis not in ("hermite", "grid"):
        raise ConfigError(f"discretization.basis must be 'hermite' or 'grid', got {basis!r}")
    refine = _int(dd.get("refine", 2), "discretization.refine", 1)
    if basis == "hermite":
        N = _int(dd.get("N", 256), "discretization.N", 8)
        if N < 4 * max(spec.k, spec.ell):
            raise ConfigError(f"discretization.N must be >= 4*max(k, ell) = {4 * max(spec.k, spec.ell)}")
        disc = Discretization("hermite", N, refine=refine)
    else:
        if "L" not in dd or "M" not in dd:
            raise ConfigError("grid basis needs discretization.L and discretization.M")
        disc = Discretization("grid", 0, _float(dd["L"], "discretization.L", 0.0, strict=True),
                              _int(dd["M"], "discretization.M", 64), refine)

    nb = raw.get("norms", {})
    _check_keys(nb, ("pairs", "m"), "norms")
    pairs = []
    for i, pr in enumerate(nb.get("pairs", [])):
        if not isinstance(pr, list) or len(pr) != 4:
            raise ConfigError(f"norms.pairs[{i}] must be [p1, q1, p2, q2]")
        pairs.append(tuple(_exponent(v, f"norms.pairs[{i}]") for v in pr))
    m = _float(nb.get("m", 0.0), "norms.m", 0.0)

    exp = dict(raw.get("experiment", {}))
    seed = exp.pop("seed", None)
    if seed is not None:
        seed = _int(seed, "experiment.seed", 0)
    _validate_experiment(exp)

    ob = raw.get("output", {})
    _check_keys(ob, ("dir",), "output")
    out = ob.get("dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output.dir must be a string")
    return RunConfig(spec, disc, tuple(pairs), m, exp, out, seed)


_EXPERIMENT_KEYS = ("fit_window", "family_size", "t_short", "t_long", "times", "beta", "lambda",
                    "p", "q", "T", "steps", "u0_mode", "epsilon", "tol", "substeps")


def _validate_experiment(exp):
    _check_keys(exp, _EXPERIMENT_KEYS, "experiment")
    if "fit_window" in exp:
        w = exp["fit_window"]
        if not (isinstance(w, list) and len(w) == 2):
            raise ConfigError("experiment.fit_window must be [j_lo, j_hi]")
        lo, hi = (_int(v, "experiment.fit_window", 1) for v in w)
        if hi - lo < 20:
            raise ConfigError("experiment.fit_window must span at least 20 modes")
        exp["fit_window"] = (lo, hi)
    for key, lo in (("family_size", 1), ("t_short", 2), ("t_long", 2), ("beta", 0),
                    ("steps", 100), ("u0_mode", 0), ("substeps", 1)):
        if key in exp:
            exp[key] = _int(exp[key], f"experiment.{key}", lo)
    if "times" in exp:
        ts = exp["times"]
        if not isinstance(ts, list) or not ts:
            raise ConfigError("experiment.times must be a nonempty list")
        ts = [_float(t, "experiment.times", 0.0, strict=True) for t in ts]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigError("experiment.times must be strictly increasing")
        exp["times"] = ts
    if "lambda" in exp:
        exp["lambda"] = _complex(exp["lambda"], "experiment.lambda")
    for key in ("p", "q"):
        if key in exp:
            exp[key] = _exponent(exp[key], f"experiment.{key}", 1.0)
    for key in ("T", "epsilon", "tol"):
        if key in exp:
            exp[key] = _float(exp[key], f"experiment.{key}", 0.0, strict=True)
