"""Semilinear heat flow  u_t + A^gamma u = lam |u|^{2 beta} u  in eigencoordinates.

Two solvers share the spectral machinery but discretize the Duhamel integral
differently: a first-order exponential time-differencing (ETD1) stepper with
step halving, and Picard iteration of the Duhamel map with an exponential
trapezoid rule (N(u) interpolated linearly between nodes).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .modulation import ModulationEngine
from .oscillator import OscillatorSpec, SpectralDecomposition
from .semigroup import EigenFunctionVector, fractional_powers

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

SUCCESS = "SUCCESS"
BLOWUP = "BLOWUP"
NOT_CONTRACTING = "NOT_CONTRACTING"
NOT_CONVERGED = "NOT_CONVERGED"
BLOWUP_FACTOR = 1e6


class ConfigurationError(RuntimeError):
    pass


def conjugate(q: float) -> float:
    if q == 1:
        return math.inf
    if math.isinf(q):
        return 1.0
    return q / (q - 1.0)


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    sigma: float = math.nan
    r: float = math.nan
    reason: str = ""


@dataclass(frozen=True, eq=False)
class NonlinearProblem:
    spec: OscillatorSpec
    beta: int
    lam: complex
    u0: EigenFunctionVector
    p: float = 2.0
    q: float = 1.5
    T: float = 10.0
    steps: int = 100

    @property
    def gamma(self):
        return self.spec.gamma

    def with_data(self, u0: EigenFunctionVector) -> "NonlinearProblem":
        return replace(self, u0=u0)


def admissibility(problem: NonlinearProblem) -> Admissibility:
    """Check 2 beta + 1 <= q', beta n / (gamma ell) < q' and sigma < 1."""
    beta, q = problem.beta, problem.q
    n, gamma, ell = problem.spec.dim, problem.spec.gamma, problem.spec.ell
    if isinstance(beta, bool) or int(beta) != beta or beta < 1:
        return Admissibility(False, reason="beta must be a positive integer")
    if not (1 <= problem.p <= math.inf and 1 <= q <= math.inf):
        return Admissibility(False, reason="p and q must lie in [1, inf]")
    qc = conjugate(q)
    if not 2 * beta + 1 <= qc:
        return Admissibility(False, reason=f"2β+1 ≤ q′ violated (2β+1={2 * beta + 1}, q′={qc:g})")
    if not beta * n / (gamma * ell) < qc:
        return Admissibility(False, reason=f"βn/(γℓ) < q′ violated ({beta * n / (gamma * ell):g} ≥ {qc:g})")
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    inv_r = (2 * beta + 1) * inv_q - 2 * beta
    inv_r = max(inv_r, 0.0) if inv_r > -1e-14 else inv_r
    if not 0 <= inv_r <= 1:
        return Admissibility(False, reason="no r in [1, inf] satisfies 1/r + 2β = (2β+1)/q")
    r = math.inf if inv_r == 0 else 1.0 / inv_r
    sigma = n / (2 * gamma * ell) * (inv_q - inv_r)
    if not sigma < 1:
        return Admissibility(False, sigma, r, reason=f"σ < 1 violated (σ={sigma:g})")
    return Admissibility(True, sigma, r)


def _require_admissible(problem):
    adm = admissibility(problem)
    if not adm.ok:
        raise ValueError(adm.reason)
    return adm


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    solver: str
    decomposition: SpectralDecomposition = field(repr=False)
    status: str = SUCCESS
    drift_history: tuple = ()

    def state(self, i) -> EigenFunctionVector:
        return EigenFunctionVector(self.states[i], self.decomposition)

    def l2_norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def to_csv(self, path):
        """Rows (t, j, re c_j, im c_j)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "j", "re", "im"])
            for t, c in zip(self.times, self.states):
                for j, v in enumerate(c):
                    w.writerow([repr(float(t)), j, repr(float(np.real(v))), repr(float(np.imag(v)))])


def sup_l2_gap(a: Trajectory, b: Trajectory) -> float:
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise ValueError("trajectories are sampled at different times")
    n = min(a.states.shape[1], b.states.shape[1])
    return float(np.max(np.linalg.norm(a.states[:, :n] - b.states[:, :n], axis=1)))


class _Nonlinearity:
    """|u|^{2 beta} u evaluated on the synthesis grid and projected back."""

    def __init__(self, d: SpectralDecomposition, n: int, beta: int):
        self.modes = d.grid.modes[:, :n]
        self.wmodes = (d.grid.weights[:, None] * self.modes)
        self.beta = beta

        self.modes_t = np.ascontiguousarray(self.modes.T)
        self.wmodes_t = np.ascontiguousarray(self.wmodes.T)

    def __call__(self, C):
        u = C @ self.modes_t
        return (self._power(u) * u) @ self.wmodes

    def vector(self, c):
        """Single coefficient vector; avoids the batched reshapes on the hot path."""
        u = self.modes @ c
        return self.wmodes_t @ (self._power(u) * u)

    def _power(self, u):
        a2 = u.real * u.real
        if np.iscomplexobj(u):
            a2 = a2 + u.imag * u.imag
        return a2 if self.beta == 1 else a2 ** self.beta


def _phi12(z):
    """phi_1(z) = (e^z - 1)/z, phi_2(z) = (e^z - 1 - z)/z^2, stable near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24 + z**4 / 120, np.expm1(zs) / zs)
    phi2 = np.where(small, 0.5 + z / 6 + z**2 / 24 + z**3 / 120 + z**4 / 720,
                    (np.expm1(zs) - zs) / zs**2)
    return phi1, phi2


def _setup(problem, d):
    if problem.u0.decomposition is not d:
        if problem.u0.decomposition.spec != d.spec:
            raise ValueError("initial data belongs to a different decomposition")
    n = len(problem.u0)
    mu = fractional_powers(d, problem.gamma)[:n]
    return n, mu


def etd_solve(problem: NonlinearProblem, d: SpectralDecomposition, drift_tol: float = 1e-6,
              max_substeps: int = 2**16) -> Trajectory:
    """ETD1 on the report grid, substeps doubled until the sup-in-time L2 drift
    between successive refinements drops below ``drift_tol``."""
    _require_admissible(problem)
    if problem.steps < 100:
        raise ValueError("etd_solve needs at least 100 report steps")
    n, mu = _setup(problem, d)
    nl = _Nonlinearity(d, n, problem.beta)
    lam = problem.lam
    # real data and real lambda keep the flow real; halve the work in that case
    real = np.isrealobj(problem.u0.coeffs) and np.imag(lam) == 0
    dtype = float if real else complex
    lam = float(np.real(lam)) if real else complex(lam)
    u0 = problem.u0.coeffs.astype(dtype)
    times = np.linspace(0.0, problem.T, problem.steps + 1)
    limit = BLOWUP_FACTOR * max(np.linalg.norm(u0), 1e-300)

    def run(sub):
        h = problem.T / (problem.steps * sub)
        E = np.exp(-h * mu)
        lphi = lam * h * _phi12(-h * mu)[0]
        out = np.empty((times.size, n), dtype=dtype)
        out[0] = u0
        c = u0.copy()
        for i in range(problem.steps):
            for _ in range(sub):
                c = E * c + lphi * nl.vector(c) if lam != 0 else E * c
            nrm = np.linalg.norm(c)
            if not np.isfinite(nrm) or nrm > limit:
                out[i + 1:] = np.nan
                return out, False
            out[i + 1] = c
        return out, True

    sub = 1
    prev, ok = run(sub)
    history = []
    status = SUCCESS
    while ok:
        if lam == 0:
            break
        sub *= 2
        cur, ok = run(sub)
        if not ok:
            break
        drift = float(np.max(np.linalg.norm(cur - prev, axis=1)))
        history.append((sub, drift))
        prev = cur
        if drift < drift_tol:
            break
        if sub >= max_substeps:
            status = NOT_CONVERGED
            log.warning("ETD step halving stopped at %d substeps, drift %.2e", sub, drift)
            break
    if not ok:
        status = BLOWUP
    return Trajectory(times, prev.astype(complex), "etd", d, status, tuple(history))


@dataclass
class ContractionReport:
    radius: float
    epsilon: float
    contraction_factor: float
    lipschitz: float
    residuals: list
    iterations: int
    status: str

    def to_dict(self):
        return {
            "radius": self.radius,
            "epsilon": self.epsilon,
            "contraction_factor": self.contraction_factor,
            "lipschitz": self.lipschitz,
            "residuals": list(self.residuals),
            "iterations": self.iterations,
            "status": self.status,
        }


class DuhamelMap:
    """T u = e^{-t A^gamma} u0 + lam int_0^t e^{-(t-s) A^gamma} N(u(s)) ds on a fine time grid."""

    def __init__(self, problem: NonlinearProblem, d: SpectralDecomposition, substeps: int = 20):
        self.problem = problem
        self.d = d
        self.n, self.mu = _setup(problem, d)
        self.nl = _Nonlinearity(d, self.n, problem.beta)
        self.substeps = substeps
        nt = problem.steps * substeps
        self.fine_times = np.linspace(0.0, problem.T, nt + 1)
        self.report = np.arange(0, nt + 1, substeps)
        h = problem.T / nt
        self.E = np.exp(-h * self.mu)
        phi1, phi2 = _phi12(-h * self.mu)
        self.w_left = h * (phi1 - phi2)
        self.w_right = h * phi2

    def linear_flow(self, u0: np.ndarray) -> np.ndarray:
        return np.exp(-np.outer(self.fine_times, self.mu)) * u0

    def duhamel(self, U: np.ndarray) -> np.ndarray:
        """int_0^t e^{-(t-s) A^gamma} N(U(s)) ds at every fine node."""
        N = self.nl(U)
        out = np.empty(N.shape, dtype=complex)
        out[0] = 0.0
        acc = np.zeros(self.n, dtype=complex)
        for i in range(N.shape[0] - 1):
            acc = self.E * acc + self.w_left * N[i] + self.w_right * N[i + 1]
            out[i + 1] = acc
        return out

    def apply(self, U: np.ndarray, linear: np.ndarray) -> np.ndarray:
        if self.problem.lam == 0:
            return linear.copy()
        return linear + self.problem.lam * self.duhamel(U)


def _sup_norm(engine, C, p, q):
    return float(np.max(engine.norms(C, p, q)))


def lipschitz_probe(problem: NonlinearProblem, d: SpectralDecomposition, radius: float,
                    engine: ModulationEngine, n_pairs: int = 2, rel_step: float = 1e-4,
                    seed: int = 0, substeps: int = 20) -> float:
    """Empirical Lipschitz factor of the Duhamel map on B_R.

    u is the linear flow from data of M^{p,q} size ``radius`` in the direction
    of ``problem.u0``; v = u + w with w a small random linear-flow perturbation.
    Returns max over pairs of sup_t ||Tu - Tv|| / sup_t ||u - v|| (M^{p,q}, report nodes).
    """
    p, q = problem.p, problem.q
    tmap = DuhamelMap(problem, d, substeps)
    direction = problem.u0.coeffs / engine.norm(problem.u0, p, q)
    u = tmap.linear_flow(radius * direction)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_pairs):
        w0 = rng.standard_normal(tmap.n) * (1.0 + np.arange(tmap.n)) ** -2.0
        w0 *= rel_step * radius / engine.norm(EigenFunctionVector(w0, d), p, q)
        w = tmap.linear_flow(w0)
        diff_out = problem.lam * (tmap.duhamel(u + w) - tmap.duhamel(u))
        num = _sup_norm(engine, diff_out[tmap.report], p, q)
        den = _sup_norm(engine, w[tmap.report], p, q)
        best = max(best, num / den)
    return best


def picard_solve(problem: NonlinearProblem, d: SpectralDecomposition, tol: float = 1e-10,
                 engine: ModulationEngine | None = None, max_iter: int = 60,
                 substeps: int = 20, probe: bool = True):
    """Fixed-point iteration of the Duhamel map started from the linear flow.

    Stops when the sup-in-time M^{p,q} distance between iterates is below
    ``tol`` (relative to ||u0||). The contraction factor is the geometric mean
    of the last three successive residual ratios.
    """
    _require_admissible(problem)
    engine = engine or ModulationEngine(d)
    p, q = problem.p, problem.q
    tmap = DuhamelMap(problem, d, substeps)
    u0 = problem.u0.coeffs.astype(complex)
    eps = engine.norm(problem.u0, p, q)
    linear = tmap.linear_flow(u0)
    U = linear
    residuals = []
    status = NOT_CONVERGED
    limit = BLOWUP_FACTOR * max(eps, 1e-300)
    for it in range(1, max_iter + 1):
        V = tmap.apply(U, linear)
        if not np.all(np.isfinite(V)):
            status = BLOWUP
            break
        res = _sup_norm(engine, (V - U)[tmap.report], p, q)
        residuals.append(res)
        U = V
        if _sup_norm(engine, U[tmap.report][::10], p, q) > limit:
            status = BLOWUP
            break
        if res < tol * max(eps, 1e-300):
            status = SUCCESS
            break
        if it >= 5 and _factor(residuals) >= 1:
            status = NOT_CONTRACTING
            break
    factor = _factor(residuals)
    if status == SUCCESS and factor >= 1:
        status = NOT_CONTRACTING
    times = tmap.fine_times[tmap.report]
    traj = Trajectory(times, U[tmap.report], "picard", d, status)
    radius = _sup_norm(engine, traj.states, p, q) if status != BLOWUP else math.inf
    lip = math.nan
    if probe and status == SUCCESS and problem.lam != 0:
        lip = lipschitz_probe(problem, d, radius, engine, substeps=substeps)
    report = ContractionReport(radius, eps, factor, lip, residuals, len(residuals), status)
    return traj, report


def _factor(residuals) -> float:
    if len(residuals) < 2:
        return 0.0
    r = np.asarray(residuals[-4:])
    if r[-1] == 0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = r[1:] / r[:-1]
    if not np.all(np.isfinite(ratios)):
        return math.inf
    return float(np.exp(np.mean(np.log(np.maximum(ratios, 1e-300)))))


def y_norm(traj: Trajectory, lambda0: float, gamma: float, p: float, q: float,
           engine: ModulationEngine) -> float:
    """max over nodes of e^{t lambda0^gamma} ||u(t)||_{M^{p,q}}."""
    if traj.status == BLOWUP or not np.all(np.isfinite(traj.states)):
        raise ValueError("trajectory blew up; Y-norm undefined")
    norms = engine.norms(traj.states, p, q)
    return float(np.max(np.exp(traj.times * lambda0 ** gamma) * norms))


def y_profile(traj: Trajectory, lambda0: float, gamma: float, p: float, q: float,
              engine: ModulationEngine) -> np.ndarray:
    """e^{t lambda0^gamma} ||u(t)||_{M^{p,q}} at every node."""
    return np.exp(traj.times * lambda0 ** gamma) * engine.norms(traj.states, p, q)


@dataclass
class SmallnessResult:
    epsilon: float
    log: list
    report: ContractionReport | None


def smallness_search(problem: NonlinearProblem, d: SpectralDecomposition,
                     engine: ModulationEngine | None = None, eps_hi: float = 4.0,
                     eps_lo: float = 1e-3, target: float = 0.5, **picard_kw) -> SmallnessResult:
    """Largest tested data size (halving from ``eps_hi``) with contraction factor <= target.

    The data direction is ``problem.u0``; its M^{p,q} norm is rescaled to each
    tested epsilon. The search log lists (epsilon, factor, status).
    """
    _require_admissible(problem)
    engine = engine or ModulationEngine(d)
    direction = problem.u0.scaled(1.0 / engine.norm(problem.u0, problem.p, problem.q))
    eps = eps_hi
    history = []
    while eps >= eps_lo:
        trial = problem.with_data(direction.scaled(eps))
        traj, rep = picard_solve(trial, d, engine=engine, probe=False, **picard_kw)
        ok = rep.status == SUCCESS and rep.contraction_factor <= target
        if ok:
            ok = math.isfinite(y_norm(traj, d.lambda0, problem.gamma, problem.p, problem.q, engine))
        history.append((eps, rep.contraction_factor, rep.status))
        log.info("smallness eps=%.4g factor=%.3g status=%s", eps, rep.contraction_factor, rep.status)
        if ok:
            return SmallnessResult(eps, history, rep)
        eps /= 2
    raise ConfigurationError(f"no data size >= {eps_lo} gives contraction factor <= {target}")


def run_manifest(problem: NonlinearProblem, statuses: dict, norms: dict, extra=None) -> dict:
    lam = complex(problem.lam)
    out = {
        "schema_version": SCHEMA_VERSION,
        "problem": {
            "k": problem.spec.k, "ell": problem.spec.ell, "gamma": problem.spec.gamma,
            "beta": problem.beta, "lambda": [lam.real, lam.imag], "p": _num(problem.p),
            "q": _num(problem.q), "T": problem.T, "steps": problem.steps,
            "u0_modes": len(problem.u0),
        },
        "statuses": statuses,
        "norms": {k: _num(v) for k, v in norms.items()},
    }
    if extra:
        out.update(extra)
    return out


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def write_manifest(path, manifest: dict):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
