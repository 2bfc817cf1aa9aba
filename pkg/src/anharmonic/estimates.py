"""Empirical confrontation of the propagator bound and the multilinear estimate."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .modulation import ModulationEngine, _stack
from .oscillator import SpectralDecomposition
from .semigroup import fractional_multipliers, fractional_powers

SCHEMA_VERSION = 1


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


@dataclass(frozen=True)
class NormPair:
    """Source M^{p1,q1} and target M^{p2,q2} exponents."""

    p1: float
    q1: float
    p2: float
    q2: float

    def __post_init__(self):
        for name in ("p1", "q1", "p2", "q2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must lie in (0, inf]")

    @property
    def inv_p_tilde(self) -> float:
        return max(_inv(self.p2) - _inv(self.p1), 0.0)

    @property
    def inv_q_tilde(self) -> float:
        return max(_inv(self.q2) - _inv(self.q1), 0.0)

    @property
    def p_tilde(self) -> float:
        return math.inf if self.inv_p_tilde == 0 else 1.0 / self.inv_p_tilde

    @property
    def q_tilde(self) -> float:
        return math.inf if self.inv_q_tilde == 0 else 1.0 / self.inv_q_tilde

    def reduced(self) -> "NormPair":
        """Target exponents replaced by min(source, target)."""
        return NormPair(self.p1, self.q1, min(self.p1, self.p2), min(self.q1, self.q2))


def sigma_exponent(pair: NormPair, k: int, ell: int, gamma: float, n: int = 1) -> float:
    """sigma = n / (2 gamma) * (1 / (k p~) + 1 / (ell q~))."""
    return n / (2.0 * gamma) * (pair.inv_p_tilde / k + pair.inv_q_tilde / ell)


def _ratios(engine: ModulationEngine, gamma, t, pair, C, denom):
    mult = fractional_multipliers(engine.d, gamma, t)[: C.shape[1]]
    num = engine.norms(C * mult, pair.p2, pair.q2)
    return num / denom


def operator_ratio(d: SpectralDecomposition, gamma: float, t: float, pair: NormPair,
                   family, engine: ModulationEngine | None = None) -> float:
    """max over the family of ||e^{-tA^gamma} f||_{M^{p2,q2}} / ||f||_{M^{p1,q1}}."""
    if not family:
        raise ValueError("family must be nonempty")
    if not t > 0:
        raise ValueError("t must be positive")
    engine = engine or ModulationEngine(d)
    C = _stack(family)
    denom = engine.norms(C, pair.p1, pair.q1)
    return float(np.max(_ratios(engine, gamma, t, pair, C, denom)))


def _loglin_fit(x, y):
    coef = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(np.polyval(coef, x) - y)))
    return float(coef[0]), float(coef[1]), resid


@dataclass(frozen=True)
class DecayFit:
    t: np.ndarray
    ratios: np.ndarray
    sigma_predicted: float
    lambda0_gamma: float
    short_slope: float
    short_log_c: float
    short_residual: float
    short_raw_slope: float
    long_rate: float
    long_log_c: float
    long_residual: float
    short_envelope: float
    long_envelope: float

    def ratio_at(self, t: float) -> float:
        i = int(np.argmin(np.abs(self.t - t)))
        return float(self.ratios[i])

    @property
    def short_bound_factor(self) -> float:
        """max_{t<=1} R(t) t^sigma / R(1)."""
        s = self.t <= 1
        return float(np.max(self.ratios[s] * self.t[s] ** self.sigma_predicted) / self.ratio_at(1.0))

    @property
    def long_bound_factor(self) -> float:
        """max_{t>=1} R(t) e^{t mu0} / (R(1) e^{mu0})."""
        s = self.t >= 1
        comp = self.ratios[s] * np.exp((self.t[s] - 1.0) * self.lambda0_gamma)
        return float(np.max(comp) / self.ratio_at(1.0))

    def predicted(self) -> np.ndarray:
        """Envelope C(t) with the two branch constants fitted separately."""
        return np.where(self.t <= 1,
                        self.short_envelope * self.t ** (-self.sigma_predicted),
                        self.long_envelope * np.exp(-self.t * self.lambda0_gamma))

    def summary(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "sigma_predicted": self.sigma_predicted,
            "lambda0_gamma": self.lambda0_gamma,
            "short_time": {"slope": self.short_slope, "log_c": self.short_log_c,
                           "raw_slope": self.short_raw_slope, "residual": self.short_residual,
                           "bound_factor": self.short_bound_factor,
                           "envelope_cprime": self.short_envelope},
            "long_time": {"rate": self.long_rate, "log_c": self.long_log_c,
                          "residual": self.long_residual, "bound_factor": self.long_bound_factor,
                          "envelope_cprime": self.long_envelope},
        }

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "R", "predicted"])
            for t, r, c in zip(self.t, self.ratios, self.predicted()):
                w.writerow([repr(float(t)), repr(float(r)), repr(float(c))])

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def default_t_grid(n_short: int = 16, n_long: int = 19) -> np.ndarray:
    return np.unique(np.concatenate([np.logspace(-3, 0, n_short), np.linspace(1, 10, n_long)]))


def decay_profile(d: SpectralDecomposition, gamma: float, pair: NormPair, family,
                  t_grid=None, engine: ModulationEngine | None = None) -> DecayFit:
    """Measure R(t) on a t grid and fit both regimes of the bound.

    Short time: log(R(t) e^{t mu0}) against log t on (0, 1]; the factor
    e^{t mu0} (mu0 = lambda_0^gamma) lies in [1, e^{mu0}] there and is removed
    so the slope isolates the algebraic t^{-sigma} behaviour. The uncompensated
    slope is kept as ``short_raw_slope``. Long time: log R(t) against t on [1, T].
    """
    t = np.asarray(default_t_grid() if t_grid is None else t_grid, dtype=float)
    if np.any(np.diff(t) <= 0) or t[0] <= 0:
        raise ValueError("t grid must be positive and strictly increasing")
    if not (t[0] <= 1e-3 * (1 + 1e-9) and np.any(np.isclose(t, 1.0)) and t[-1] >= 10 * (1 - 1e-9)):
        raise ValueError("t grid must cover [1e-3, 1] and [1, 10] and contain t = 1")
    engine = engine or ModulationEngine(d)
    C = _stack(family)
    denom = engine.norms(C, pair.p1, pair.q1)
    # all times in one batch of STFTs
    mu = fractional_powers(d, gamma)[: C.shape[1]]
    stacked = np.concatenate([C * np.exp(-ti * mu) for ti in t])
    num = engine.norms(stacked, pair.p2, pair.q2).reshape(t.size, C.shape[0])
    R = np.max(num / denom, axis=1)
    mu0 = float(mu[0])
    sigma = sigma_exponent(pair, d.spec.k, d.spec.ell, gamma, d.spec.dim)
    short = t <= 1 + 1e-12
    long_ = t >= 1 - 1e-12
    ls, lt = np.log(t[short]), np.log(R[short])
    s_slope, s_c, s_res = _loglin_fit(ls, lt + mu0 * t[short])
    raw_slope, _, _ = _loglin_fit(ls, lt)
    l_slope, l_c, l_res = _loglin_fit(t[long_], np.log(R[long_]))
    env_s = float(np.max(R[short] * t[short] ** sigma))
    env_l = float(np.max(R[long_] * np.exp(t[long_] * mu0)))
    return DecayFit(t, R, sigma, mu0, s_slope, s_c, s_res, raw_slope,
                    -l_slope, l_c, l_res, env_s, env_l)


def multilinear_ratio(f_grid, beta: int, p: float, q: float, r: float,
                      engine: ModulationEngine) -> float:
    """||(|f|^{2 beta} f)||_{M^{p,r}} / ||f||_{M^{p,q}}^{2 beta + 1}."""
    if abs(_inv(r) + 2 * beta - (2 * beta + 1) * _inv(q)) > 1e-12:
        raise ValueError(f"exponents violate 1/r + 2 beta = (2 beta + 1)/q "
                         f"(beta={beta}, q={q}, r={r})")
    f = np.asarray(f_grid)
    nonlin = np.abs(f) ** (2 * beta) * f
    num = engine.norms_of_samples(nonlin, p, r)[0]
    den = engine.norms_of_samples(f, p, q)[0]
    return float(num / den ** (2 * beta + 1))


def projection_bound_probe(d: SpectralDecomposition, j: int, pair: NormPair, m: float,
                           family, engine: ModulationEngine | None = None) -> float:
    """max_f ||P_j f||_{M^{p2,q2}} / ||f||_{M^{p1,q1}}, divided by lambda_j^m."""
    if not 0 <= j < d.trusted_count:
        raise ValueError(f"mode {j} is not trusted (trusted_count={d.trusted_count})")
    engine = engine or ModulationEngine(d)
    C = _stack(family)
    denom = engine.norms(C, pair.p1, pair.q1)
    cj = np.abs(C[:, j]) if C.shape[1] > j else np.zeros(C.shape[0])
    phi = np.zeros((1, j + 1))
    phi[0, j] = 1.0
    phi_norm = engine.norms(phi, pair.p2, pair.q2)[0]
    return float(np.max(cj * phi_norm / denom) / d.eigenvalues[j] ** m)
