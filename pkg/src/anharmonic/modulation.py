"""Short-time Fourier transform, anharmonic weights and mixed quasi-norms.

Convention: V_g f(x, xi) = int f(y) conj(g(y - x)) exp(-i y xi) dy, no 2 pi
normalization. The phase-space integral of |V_g f|^2 equals kappa ||f||^2 ||g||^2;
kappa is measured by quadrature (``plancherel_constant``) rather than assumed.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .oscillator import SpectralDecomposition
from .semigroup import EigenFunctionVector, synthesize_many

BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class WindowSpec:
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported window kind {self.kind!r}")

    def __call__(self, y):
        return math.pi ** -0.25 * np.exp(-0.5 * np.asarray(y) ** 2)


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """Uniform (x, xi) lattice for STFT sampling of functions given on ``y``.

    x shifts are every ``stride``-th sample point; xi points are the FFT
    frequencies of the (zero-padded) sample grid, cropped to |xi| <= pi / hx
    so that hx * Xi_max <= pi.
    """

    y: np.ndarray
    stride: int = 2
    pad: int = 1

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size < 8:
            raise ValueError("sample grid must be 1-D with at least 8 points")
        h = np.diff(y)
        if not np.allclose(h, h[0], rtol=1e-9, atol=0):
            raise ValueError("sample grid must be uniform")
        if self.stride < 1 or self.pad < 1:
            raise ValueError("stride and pad must be positive integers")
        object.__setattr__(self, "y", y)

    @property
    def hy(self) -> float:
        return float(self.y[1] - self.y[0])

    @cached_property
    def x_index(self) -> np.ndarray:
        mid = (self.y.size - 1) // 2
        return np.concatenate([np.arange(mid, -1, -self.stride)[::-1],
                               np.arange(mid + self.stride, self.y.size, self.stride)])

    @cached_property
    def x_points(self) -> np.ndarray:
        return self.y[self.x_index]

    @property
    def hx(self) -> float:
        return self.stride * self.hy

    @property
    def nfft(self) -> int:
        return self.y.size * self.pad

    @cached_property
    def _xi_all(self) -> np.ndarray:
        return 2 * math.pi * np.fft.fftfreq(self.nfft, d=self.hy)

    @cached_property
    def xi_index(self) -> np.ndarray:
        xi = self._xi_all
        keep = np.nonzero(np.abs(xi) <= self.xi_max + 1e-12)[0]
        return keep[np.argsort(xi[keep])]

    @cached_property
    def xi_points(self) -> np.ndarray:
        return self._xi_all[self.xi_index]

    @property
    def hxi(self) -> float:
        return 2 * math.pi / (self.nfft * self.hy)

    @property
    def xi_max(self) -> float:
        return math.pi / self.hx

    @property
    def extents(self):
        return float(np.max(np.abs(self.x_points))), float(np.max(np.abs(self.xi_points)))


@dataclass(frozen=True, eq=False)
class StftField:
    values: np.ndarray
    grid: PhaseSpaceGrid = field(repr=False)
    window: WindowSpec = WindowSpec()
    boundary_warning: bool = False

    def to_csv(self, path):
        """Write rows (x, xi, re, im)."""
        X, XI = np.meshgrid(self.grid.x_points, self.grid.xi_points, indexing="ij")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "xi", "re", "im"])
            for x, xi, v in zip(X.ravel(), XI.ravel(), self.values.ravel()):
                w.writerow([repr(float(x)), repr(float(xi)), repr(float(v.real)), repr(float(v.imag))])


@dataclass(frozen=True)
class ModNormParams:
    p: float = 2.0
    q: float = 2.0
    m: float = 0.0
    k: int = 1
    ell: int = 1

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be in (0, inf], got {v}")


def window_matrix(window: WindowSpec, grid: PhaseSpaceGrid) -> np.ndarray:
    """conj(g(y_n - x_a)), shape (n_x, n_y)."""
    return np.conj(window(grid.y[None, :] - grid.x_points[:, None]))


def stft_many(f_grid: np.ndarray, window: WindowSpec, grid: PhaseSpaceGrid, G=None):
    """STFT of a stack of grid functions, shape (B, n_x, n_xi)."""
    F = np.atleast_2d(np.asarray(f_grid))
    if F.shape[-1] != grid.y.size:
        raise ValueError(f"samples have length {F.shape[-1]}, grid has {grid.y.size} points")
    if G is None:
        G = window_matrix(window, grid)
    phase = np.exp(-1j * grid.y[0] * grid.xi_points) * grid.hy
    spec = np.fft.fft(F[:, None, :] * G[None], n=grid.nfft, axis=-1)
    return spec[..., grid.xi_index] * phase


def stft(f_grid, window: WindowSpec, grid: PhaseSpaceGrid) -> StftField:
    """Quadrature STFT of samples on ``grid.y``; FFT along y for every shift."""
    f = np.asarray(f_grid)
    peak = float(np.max(np.abs(f))) if f.size else 0.0
    edge = max(abs(f[0]), abs(f[-1]))
    flag = bool(peak > 0 and edge > BOUNDARY_TOL * peak)
    if flag:
        warnings.warn("function does not decay at the sample grid boundary", RuntimeWarning)
    return StftField(stft_many(f, window, grid)[0], grid, window, flag)


def weight_v(x, xi, k: int, ell: int, m: float):
    """(1 + |x|^k + |xi|^ell)^m with the multiplicative constant set to 1."""
    return (1.0 + np.abs(x) ** k + np.abs(xi) ** ell) ** m


def submultiplicativity_constant(k: int, ell: int) -> float:
    """A constant C with v(z + w) <= C v(z) v(w) for v = 1 + |x|^k + |xi|^ell."""
    return 2.0 ** max(k, ell)


def _lp(a, p, h, axis):
    if math.isinf(p):
        return np.max(a, axis=axis)
    return (np.sum(a ** p, axis=axis) * h) ** (1.0 / p)


def mixed_norm(magnitudes: np.ndarray, p: float, q: float, hx: float = 1.0, hxi: float = 1.0):
    """Inner L^p over x (axis -2), outer L^q over xi (axis -1) of nonnegative arrays.

    With hx = hxi = 1 this is the counting-measure mixed sequence norm.
    """
    inner = _lp(magnitudes, p, hx, axis=-2)
    return _lp(inner, q, hxi, axis=-1)


def _weights(grid: PhaseSpaceGrid, params: ModNormParams):
    if params.m == 0:
        return None
    X, XI = np.meshgrid(grid.x_points, grid.xi_points, indexing="ij")
    return weight_v(X, XI, params.k, params.ell, params.m)


def modulation_norm(field: StftField, params: ModNormParams) -> float:
    """quasi-norm ( int ( int |V f|^p v^{mp} dx )^{q/p} dxi )^{1/q} by Riemann sums."""
    if not np.all(np.isfinite(field.values)):
        raise ValueError("STFT field has non-finite entries")
    mag = np.abs(field.values)
    w = _weights(field.grid, params)
    if w is not None:
        mag = mag * w
    return float(mixed_norm(mag, params.p, params.q, field.grid.hx, field.grid.hxi))


def plancherel_constant(grid: PhaseSpaceGrid, window: WindowSpec = WindowSpec()) -> float:
    """kappa with  int int |V_g g|^2 dx dxi = kappa ||g||^4 on the unit Gaussian."""
    g = window(grid.y)
    V = stft_many(g, window, grid)[0]
    phase_energy = float(np.sum(np.abs(V) ** 2) * grid.hx * grid.hxi)
    l2 = float(np.sum(np.abs(g) ** 2) * grid.hy)
    return phase_energy / l2**2


def sobolev_norm(d: SpectralDecomposition, f: EigenFunctionVector, s: float) -> float:
    """(sum_j lambda_j^s |c_j|^2)^{1/2}."""
    lam = d.eigenvalues[: len(f)]
    return float(np.sqrt(np.sum(lam ** s * np.abs(f.coeffs) ** 2)))


class ModulationEngine:
    """STFT and modulation norms for functions expanded in a decomposition.

    Holds the phase-space grid over the decomposition's synthesis grid, the
    unit Gaussian window and the measured Plancherel constant.
    """

    def __init__(self, d: SpectralDecomposition, stride: int = 2, pad: int = 1,
                 window: WindowSpec = WindowSpec(), chunk: int = 16):
        self.d = d
        self.window = window
        self.grid = PhaseSpaceGrid(d.grid.x, stride, pad)
        self.chunk = chunk
        self._G = window_matrix(window, self.grid)
        self.kappa = plancherel_constant(self.grid, window)
        self._wcache = {}

    @property
    def k(self):
        return self.d.spec.k

    @property
    def ell(self):
        return self.d.spec.ell

    def field(self, f) -> StftField:
        return stft(self._samples(f)[0], self.window, self.grid)

    def _samples(self, f):
        if isinstance(f, EigenFunctionVector):
            return synthesize_many(self.d, f.coeffs)
        return np.atleast_2d(np.asarray(f))

    def _weight(self, m):
        if m not in self._wcache:
            self._wcache[m] = _weights(self.grid, ModNormParams(m=m, k=self.k, ell=self.ell))
        return self._wcache[m]

    def norms_of_samples(self, F: np.ndarray, p: float, q: float, m: float = 0.0) -> np.ndarray:
        """Modulation norms of each row of grid samples."""
        F = np.atleast_2d(F)
        out = np.empty(F.shape[0])
        w = self._weight(m)
        for i in range(0, F.shape[0], self.chunk):
            mag = np.abs(stft_many(F[i:i + self.chunk], self.window, self.grid, self._G))
            if w is not None:
                mag *= w
            out[i:i + self.chunk] = mixed_norm(mag, p, q, self.grid.hx, self.grid.hxi)
        return out

    def norms(self, coeffs: np.ndarray, p: float, q: float, m: float = 0.0) -> np.ndarray:
        """Modulation norms of each row of eigencoefficients."""
        return self.norms_of_samples(synthesize_many(self.d, coeffs), p, q, m)

    def norm(self, f, p: float, q: float, m: float = 0.0) -> float:
        return float(self.norms_of_samples(self._samples(f), p, q, m)[0])


@dataclass(frozen=True)
class EquivalenceReport:
    ratios: np.ndarray
    spread: float


def norm_equivalence_report(engine: ModulationEngine, family, m: float) -> EquivalenceReport:
    """Spread max/min of M^{2,2}_{v^m} over H^m_{k,ell} ratios across a family."""
    if not family:
        raise ValueError("family must be nonempty")
    C = _stack(family)
    mod = engine.norms(C, 2.0, 2.0, m)
    sob = np.array([sobolev_norm(engine.d, f, m) for f in family])
    r = mod / sob
    return EquivalenceReport(r, float(r.max() / r.min()))


def _stack(family) -> np.ndarray:
    n = max(len(f) for f in family)
    dtype = np.result_type(*[f.coeffs.dtype for f in family])
    C = np.zeros((len(family), n), dtype=dtype)
    for i, f in enumerate(family):
        C[i, : len(f)] = f.coeffs
    return C
