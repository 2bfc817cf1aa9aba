"""Spectral realization of A^gamma and of the heat flow exp(-t A^gamma)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .oscillator import SpectralDecomposition

TAIL_TOL = 1e-8
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EigenFunctionVector:
    """Eigencoefficients c_j = <f, Phi_j> on the trusted modes of ``decomposition``."""

    coeffs: np.ndarray
    decomposition: SpectralDecomposition = field(repr=False)
    tail_energy: float = 0.0
    trusted: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 1:
            raise ValueError("coefficients must be a 1-D sequence")
        if c.size > self.decomposition.trusted_count:
            raise ValueError(
                f"{c.size} coefficients exceed trusted_count={self.decomposition.trusted_count}")
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return self.coeffs.size

    @property
    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def scaled(self, c) -> "EigenFunctionVector":
        return EigenFunctionVector(c * self.coeffs, self.decomposition, self.tail_energy, self.trusted)

    def padded(self) -> np.ndarray:
        """Coefficients zero-extended to the full trusted length."""
        out = np.zeros(self.decomposition.trusted_count, dtype=self.coeffs.dtype)
        out[: self.coeffs.size] = self.coeffs
        return out


def eigenfunction(d: SpectralDecomposition, j: int) -> EigenFunctionVector:
    if not 0 <= j < d.trusted_count:
        raise ValueError(f"mode {j} is not trusted (trusted_count={d.trusted_count})")
    c = np.zeros(j + 1)
    c[j] = 1.0
    return EigenFunctionVector(c, d)


@dataclass(frozen=True)
class PredictedBound:
    """Shape of the propagator bound: cprime t^-sigma on (0,1], cprime e^{-t lambda0^gamma} after."""

    sigma: float
    lambda0: float
    gamma: float
    cprime: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not (self.lambda0 > 0 and self.gamma > 0 and self.cprime > 0):
            raise ValueError("lambda0, gamma and cprime must be positive")


def _check_time(t, strict=False):
    t = float(t)
    if not math.isfinite(t) or t < 0 or (strict and t == 0):
        raise ValueError(f"time must be {'positive' if strict else 'nonnegative'}, got {t}")
    return t


def fractional_powers(d: SpectralDecomposition, gamma: float) -> np.ndarray:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return d.trusted_eigenvalues ** gamma


def fractional_multipliers(d: SpectralDecomposition, gamma: float, t: float) -> np.ndarray:
    """exp(-t lambda_j^gamma) for the trusted modes."""
    t = _check_time(t)
    return np.exp(-t * fractional_powers(d, gamma))


def _same(d1: SpectralDecomposition, d2: SpectralDecomposition) -> bool:
    if d1 is d2:
        return True
    return (d1.spec == d2.spec and d1.basis == d2.basis
            and np.array_equal(d1.eigenvalues, d2.eigenvalues))


def propagate(d: SpectralDecomposition, gamma: float, t: float,
              f: EigenFunctionVector) -> EigenFunctionVector:
    """exp(-t A^gamma) f as coefficientwise multiplication."""
    if not _same(f.decomposition, d):
        raise ValueError("coefficient vector belongs to a different decomposition")
    if f.tail_energy > TAIL_TOL:
        warnings.warn(f"input tail energy {f.tail_energy:.2e} lies beyond the trusted modes",
                      RuntimeWarning)
    mult = fractional_multipliers(d, gamma, t)[: len(f)]
    return EigenFunctionVector(mult * f.coeffs, d, f.tail_energy, f.trusted)


def predicted_constant(b: PredictedBound, t: float) -> float:
    t = _check_time(t, strict=True)
    if t <= 1:
        return b.cprime * t ** (-b.sigma)
    return b.cprime * math.exp(-t * b.lambda0 ** b.gamma)


def eigenvalue_sum_ratio(d: SpectralDecomposition, gamma: float, t: float, m: float) -> float:
    """sum_j exp(-t lambda_j^gamma) lambda_j^m, normalized by exp(-t lambda_0^gamma).

    Stays bounded for t >= 1; terms are accumulated relative to the ground
    state to avoid underflow at large t.
    """
    t = _check_time(t, strict=True)
    mu = fractional_powers(d, gamma)
    lam = d.trusted_eigenvalues
    terms = np.exp(-t * (mu - mu[0])) * lam ** m
    if terms[-1] > 1e-12 * terms.sum():
        warnings.warn("eigenvalue sum not converged within trusted modes", RuntimeWarning)
    return float(terms.sum())


def analyze(d: SpectralDecomposition, f_grid) -> EigenFunctionVector:
    """Quadrature projection of grid samples onto the trusted eigenfunctions.

    The result is flagged untrusted when the samples do not vanish at the grid
    boundary or when more than 1e-8 of the energy lies outside the trusted modes.
    """
    f = np.asarray(f_grid)
    if f.shape != d.grid.x.shape:
        raise ValueError(f"grid function has shape {f.shape}, expected {d.grid.x.shape}")
    w = d.grid.weights
    coeffs = d.trusted_modes.T @ (w * f)
    energy = float(np.sum(w * np.abs(f) ** 2))
    tail = max(energy - float(np.sum(np.abs(coeffs) ** 2)), 0.0)
    rel_tail = tail / energy if energy > 0 else 0.0
    peak = float(np.max(np.abs(f))) if f.size else 0.0
    edge = max(abs(f[0]), abs(f[-1]))
    trusted = rel_tail < TAIL_TOL and (peak == 0 or edge <= BOUNDARY_TOL * peak)
    return EigenFunctionVector(coeffs, d, rel_tail, bool(trusted))


def synthesize(d: SpectralDecomposition, v: EigenFunctionVector) -> np.ndarray:
    if not _same(v.decomposition, d):
        raise ValueError("coefficient vector belongs to a different decomposition")
    return d.grid.modes[:, : len(v)] @ v.coeffs


def synthesize_many(d: SpectralDecomposition, coeffs: np.ndarray) -> np.ndarray:
    """Grid samples for a stack of coefficient rows, shape (B, M)."""
    coeffs = np.atleast_2d(coeffs)
    return coeffs @ d.grid.modes[:, : coeffs.shape[1]].T


def analyze_many(d: SpectralDecomposition, f_grid: np.ndarray, n: int | None = None) -> np.ndarray:
    """Rows of grid samples to rows of coefficients on the first n trusted modes."""
    n = d.trusted_count if n is None else n
    return (np.atleast_2d(f_grid) * d.grid.weights) @ d.grid.modes[:, :n]
