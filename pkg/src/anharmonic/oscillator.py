"""Finite-dimensional models of A = (-d^2/dx^2)^ell + |x|^(2k) and their spectra.

Two unrelated discretizations are provided:

* a Hermite-Galerkin matrix built from ladder operators (spectral accuracy
  for the Schwartz-class eigenfunctions), optionally in a rescaled Hermite
  basis ``s^{-1/2} h_n(x / s)``;
* a uniform-grid finite-difference matrix with Dirichlet truncation at +-L,
  used as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse

# Central 8th-order stencil for the second derivative, coefficients for
# offsets 4, 3, 2, 1, 0.
_STENCIL_D2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72])

DRIFT_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Eigensolver failure or an unusable spectrum."""


@dataclass(frozen=True)
class OscillatorSpec:
    k: int
    ell: int
    gamma: float = 1.0
    dim: int = 1

    def __post_init__(self):
        for name in ("k", "ell", "dim"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        if self.dim != 1:
            raise NotImplementedError("only dim=1 runs are supported")

    @property
    def weyl_exponent(self) -> float:
        """Growth exponent of lambda_j in j, 2 k ell / (n (k + ell))."""
        return 2 * self.k * self.ell / (self.dim * (self.k + self.ell))


@dataclass(frozen=True)
class HermiteBasis:
    N: int
    scale: float = 1.0

    @property
    def size(self):
        return self.N

    def doubled(self):
        return HermiteBasis(2 * self.N, self.scale)

    def key(self):
        return f"hermite_N{self.N}_s{self.scale!r}"


@dataclass(frozen=True)
class GridBasis:
    L: float
    M: int

    @property
    def size(self):
        return self.M

    def doubled(self):
        return GridBasis(self.L, 2 * self.M)

    def key(self):
        return f"grid_L{self.L!r}_M{self.M}"


@dataclass(frozen=True)
class OperatorMatrix:
    """Symmetric banded matrix; ``bands`` uses LAPACK upper banded storage."""

    bands: np.ndarray
    basis: HermiteBasis | GridBasis
    spec: OscillatorSpec

    @property
    def size(self):
        return self.bands.shape[1]

    @property
    def bandwidth(self):
        return self.bands.shape[0] - 1

    @property
    def entries(self) -> np.ndarray:
        """Dense N x N form."""
        bw, n = self.bandwidth, self.size
        A = np.zeros((n, n))
        for off in range(bw + 1):
            d = self.bands[bw - off, off:]
            A[np.arange(n - off), np.arange(off, n)] = d
            A[np.arange(off, n), np.arange(n - off)] = d
        return A


def _to_bands(S: sparse.spmatrix, bw: int) -> np.ndarray:
    S = sparse.csr_matrix(S)
    n = S.shape[0]
    ab = np.zeros((bw + 1, n))
    for off in range(bw + 1):
        upper = S.diagonal(off)
        lower = S.diagonal(-off)
        ab[bw - off, off:] = 0.5 * (upper + lower)
    return ab


@dataclass(frozen=True)
class SynthesisGrid:
    """Quadrature nodes, weights and eigenfunction samples (columns)."""

    x: np.ndarray
    weights: np.ndarray
    modes: np.ndarray

    @property
    def spacing(self):
        return float(self.x[1] - self.x[0])


@dataclass(frozen=True)
class ConvergenceReport:
    basis: HermiteBasis | GridBasis
    drift: np.ndarray
    trusted_count: int
    monotone: bool


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    spec: OscillatorSpec
    basis: HermiteBasis | GridBasis
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    trusted_count: int
    grid: SynthesisGrid
    drift: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        for arr in (self.eigenvalues, self.eigenvectors, self.grid.x,
                    self.grid.weights, self.grid.modes):
            arr.setflags(write=False)

    @property
    def lambda0(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def trusted_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[: self.trusted_count]

    @property
    def trusted_modes(self) -> np.ndarray:
        return self.grid.modes[:, : self.trusted_count]


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    predicted: float
    j_lo: int
    j_hi: int

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "predicted": self.predicted,
            "j_lo": self.j_lo,
            "j_hi": self.j_hi,
        }


def balanced_scale(spec: OscillatorSpec, N: int) -> float:
    """Hermite length scale that fits the basis disc to the level sets of
    |xi|^(2 ell) + |x|^(2k).

    A basis of size N covers |x| <= s sqrt(2N), |xi| <= sqrt(2N)/s; equating
    both with the extents of the largest resolvable level set gives
    s = (2N)^((ell - k) / (2 (k + ell))). The harmonic and k = ell cases give 1.
    """
    return float((2.0 * N) ** ((spec.ell - spec.k) / (2.0 * (spec.k + spec.ell))))


def _ladder_matrices(P: int, scale: float):
    n = np.arange(P, dtype=float)
    off = np.sqrt((n[:-1] + 1) / 2.0)
    X = scale * sparse.diags([off, off], [1, -1], format="csr")
    a2 = np.sqrt((n[:-2] + 1) * (n[:-2] + 2))
    # -D^2 = (2 N + 1 - a^2 - a^dagger^2) / 2 in the unit basis
    K = sparse.diags([2 * n + 1, -a2, -a2], [0, 2, -2], format="csr") / (2.0 * scale**2)
    return X, K


def _spower(S, p):
    out = S
    for _ in range(p - 1):
        out = out @ S
    return out


def assemble_hermite(spec: OscillatorSpec, N: int, scale: float = 1.0) -> OperatorMatrix:
    """Galerkin matrix of A on the first N (scaled) Hermite functions.

    Powers are taken on ladder matrices padded by 2 max(k, ell) + 2 rows so
    that the cropped N x N block is exact.
    """
    if N < 4 * spec.k or N < 4 * spec.ell:
        raise ValueError(f"basis size N={N} must be at least 4k and 4*ell")
    if not scale > 0:
        raise ValueError("scale must be positive")
    P = N + 2 * max(spec.k, spec.ell) + 2
    X, K = _ladder_matrices(P, scale)
    A = (_spower(X, 2 * spec.k) + _spower(K, spec.ell))[:N, :N]
    bw = 2 * max(spec.k, spec.ell)
    return OperatorMatrix(_to_bands(A, bw), HermiteBasis(N, float(scale)), spec)


def grid_points(L: float, M: int) -> np.ndarray:
    h = 2.0 * L / (M + 1)
    return -L + h * np.arange(1, M + 1)


def assemble_grid(spec: OscillatorSpec, L: float, M: int) -> OperatorMatrix:
    """Finite-difference matrix on M interior points of [-L, L], Dirichlet ends.

    The second derivative uses the 8th-order central stencil; the operator
    power (-D^2)^ell is its matrix power.
    """
    if not (isinstance(L, (int, float, np.floating)) and L > 0 and math.isfinite(L)):
        raise ValueError(f"half-width L must be positive, got {L!r}")
    if M < 64:
        raise ValueError(f"grid needs at least 64 points, got {M}")
    x = grid_points(L, M)
    h = x[1] - x[0]
    w = len(_STENCIL_D2) - 1
    diags, offsets = [], []
    for i, c in enumerate(_STENCIL_D2):
        off = w - i
        diags.append(np.full(M - off, -c / h**2))
        offsets.append(off)
        if off:
            diags.append(np.full(M - off, -c / h**2))
            offsets.append(-off)
    D = sparse.diags(diags, offsets, format="csr")
    A = _spower(D, spec.ell) + sparse.diags(np.abs(x) ** (2 * spec.k))
    return OperatorMatrix(_to_bands(A, w * spec.ell), GridBasis(float(L), int(M)), spec)


def turning_point_halfwidth(spec: OscillatorSpec, lambda_target: float,
                            safety: float = 4.0, tail: float = 1e-14) -> float:
    """Half-width L for the finite-difference oracle.

    L satisfies L^(2k) >= safety * lambda_target and, beyond the turning
    point, the WKB decay exponent int (x^(2k) - lambda)^(1/(2 ell)) dx reaches
    log(1/tail) so eigenfunctions are negligible at the Dirichlet wall.
    """
    k, ell = spec.k, spec.ell
    L = (safety * lambda_target) ** (1.0 / (2 * k))
    x_t = lambda_target ** (1.0 / (2 * k))
    target = math.log(1.0 / tail)
    xs = np.linspace(x_t, x_t + 50.0, 20001)
    integrand = np.clip(xs ** (2 * k) - lambda_target, 0.0, None) ** (1.0 / (2 * ell))
    action = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(xs))])
    idx = int(np.searchsorted(action, target))
    L_wkb = xs[min(idx, len(xs) - 1)]
    return float(max(L, L_wkb))


def hermite_functions(x: np.ndarray, N: int, scale: float = 1.0) -> np.ndarray:
    """Samples of the first N scaled Hermite functions, shape (len(x), N).

    The three-term recurrence runs on mantissas with a per-point log scale so
    high degrees do not underflow far from the origin.
    """
    y = np.asarray(x, dtype=float) / scale
    out = np.empty((y.size, N))
    log_scale = -0.5 * y**2 - 0.25 * math.log(math.pi) - 0.5 * math.log(scale)
    prev = np.zeros_like(y)
    cur = np.ones_like(y)
    out[:, 0] = np.exp(log_scale)
    for n in range(N - 1):
        nxt = math.sqrt(2.0 / (n + 1)) * y * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e100
        if big.any():
            cur[big] *= 1e-100
            prev[big] *= 1e-100
            log_scale[big] += 100 * math.log(10)
        out[:, n + 1] = cur * np.exp(log_scale)
    return out


def hermite_synthesis_grid(basis: HermiteBasis, refine: int = 2):
    """Uniform quadrature grid resolving every function in the basis.

    Extents cover the oscillatory region s sqrt(2N + 1) plus a decay margin in
    both x and xi; ``refine`` divides the spacing further so that cubic
    nonlinearities are integrated without aliasing.
    """
    s, N = basis.scale, basis.N
    reach = math.sqrt(2 * N + 1) + 8.0
    x_ext = s * reach
    xi_ext = reach / s
    h = math.pi / (refine * xi_ext)
    M = 2 * int(math.ceil(x_ext / h)) + 1
    x = h * (np.arange(M) - (M - 1) // 2)
    return x, np.full(M, h)


def _banded_vectors(m: OperatorMatrix, vals: np.ndarray) -> np.ndarray:
    """Eigenvectors for known eigenvalues by shifted banded solves (as LAPACK
    stein does), cheaper than accumulating the full orthogonal reduction."""
    n, bw = m.size, m.bandwidth
    full = np.zeros((2 * bw + 1, n))
    full[: bw + 1] = m.bands
    for off in range(1, bw + 1):
        full[bw + off, : n - off] = m.bands[bw - off, off:]
    rng = np.random.default_rng(0)
    vecs = np.empty((n, vals.size))
    scale = max(abs(vals[-1]), 1.0)
    for i, lam in enumerate(vals):
        shifted = full.copy()
        shifted[bw] -= lam + 1e-13 * scale
        v = rng.standard_normal(n)
        for _ in range(3):
            v = linalg.solve_banded((bw, bw), shifted, v, check_finite=False)
            v -= vecs[:, :i] @ (vecs[:, :i].T @ v)
            v /= np.linalg.norm(v)
        vecs[:, i] = v
    return vecs


def _eig(m: OperatorMatrix, n_modes: int, vectors: bool = True):
    n, bw = m.size, m.bandwidth
    try:
        if bw < n // 8:
            vals = linalg.eig_banded(m.bands, lower=False, eigvals_only=True,
                                     select="i", select_range=(0, n_modes - 1))
            if not vectors:
                return vals
            if n_modes > n // 4:
                vals, vecs = linalg.eig_banded(m.bands, lower=False, select="i",
                                               select_range=(0, n_modes - 1))
                return vals, vecs
            return vals, _banded_vectors(m, vals)
        return linalg.eigh(m.entries, eigvals_only=not vectors,
                           subset_by_index=(0, n_modes - 1))
    except (linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"eigensolver failed for {m.basis}: {exc}") from exc


def _assemble(spec, basis):
    if isinstance(basis, HermiteBasis):
        return assemble_hermite(spec, basis.N, basis.scale)
    return assemble_grid(spec, basis.L, basis.M)


def convergence_check(spec: OscillatorSpec, basis, n_modes: int) -> ConvergenceReport:
    """Compare the lowest n_modes eigenvalues at basis sizes N and 2N.

    ``trusted_count`` is the length of the leading run of modes whose relative
    drift is below 1e-9. ``monotone`` reports whether drift, once above the
    round-off floor, is nondecreasing in j; a False value flags an irregular
    convergence pattern worth inspecting.
    """
    if isinstance(basis, (int, np.integer)):
        basis = HermiteBasis(int(basis))
    n_modes = min(n_modes, basis.size)
    e1 = _eig(_assemble(spec, basis), n_modes, vectors=False)
    e2 = _eig(_assemble(spec, basis.doubled()), n_modes, vectors=False)
    drift = np.abs(e1 - e2) / np.abs(e2)
    bad = np.nonzero(~(drift < DRIFT_TOL))[0]
    trusted = int(bad[0]) if bad.size else n_modes
    above = drift[drift >= DRIFT_TOL]
    monotone = bool(np.all(np.diff(above) >= 0)) if above.size > 1 else True
    return ConvergenceReport(basis, drift, trusted, monotone)


def eigendecompose(m: OperatorMatrix, n_modes: int | None = None,
                   report: ConvergenceReport | None = None, refine: int = 2) -> SpectralDecomposition:
    """Ascending eigenpairs of ``m`` with certified trusted modes and grid samples."""
    n = m.size
    if n_modes is None:
        n_modes = n
    if not 1 <= n_modes <= n:
        raise ValueError(f"n_modes must lie in [1, {n}], got {n_modes}")
    vals, vecs = _eig(m, n_modes)
    if not np.all(np.isfinite(vals)):
        raise ConvergenceError("non-finite eigenvalues")
    if vals[0] <= 0:
        raise ConvergenceError(f"smallest eigenvalue {vals[0]} is not positive")
    if report is None:
        report = convergence_check(m.spec, m.basis, n_modes)
    trusted = min(report.trusted_count, n_modes)
    # strict ascent among trusted modes
    gaps = np.diff(vals[:trusted])
    if gaps.size and np.any(gaps <= 0):
        trusted = int(np.argmax(gaps <= 0)) + 1
    # fix the sign convention: largest-magnitude coefficient positive
    pivots = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
    vecs = vecs * np.where(pivots < 0, -1.0, 1.0)
    if isinstance(m.basis, HermiteBasis):
        x, w = hermite_synthesis_grid(m.basis, refine)
        modes = hermite_functions(x, m.basis.N, m.basis.scale) @ vecs
    else:
        x = grid_points(m.basis.L, m.basis.M)
        h = x[1] - x[0]
        w = np.full(x.size, h)
        modes = vecs / math.sqrt(h)
    grid = SynthesisGrid(np.ascontiguousarray(x), w, np.ascontiguousarray(modes))
    return SpectralDecomposition(m.spec, m.basis, vals, vecs, trusted, grid, report.drift)


def solve_spectrum(spec: OscillatorSpec, N: int, n_modes: int | None = None,
                   scale: float | str = "balanced", refine: int = 2) -> SpectralDecomposition:
    """Hermite eigendecomposition with the balanced length scale by default."""
    if scale == "balanced":
        scale = balanced_scale(spec, N)
    return eigendecompose(assemble_hermite(spec, N, float(scale)), n_modes, refine=refine)


def asymptotic_fit(d: SpectralDecomposition, j_lo: int, j_hi: int) -> ExponentFit:
    """Least-squares slope of log lambda_j against log j on [j_lo, j_hi]."""
    if j_hi - j_lo < 20:
        raise ValueError(f"fit window [{j_lo}, {j_hi}] spans fewer than 20 modes")
    if j_lo < 1:
        raise ValueError("j_lo must be at least 1 (log j)")
    if j_hi > d.trusted_count:
        raise ValueError(f"j_hi={j_hi} exceeds trusted_count={d.trusted_count}")
    j = np.arange(j_lo, min(j_hi + 1, d.trusted_count))
    lj, ll = np.log(j), np.log(d.eigenvalues[j])
    coef, res, *_ = np.polyfit(lj, ll, 1, full=True)
    residual = float(np.sqrt(res[0] / j.size)) if res.size else 0.0
    return ExponentFit(float(coef[0]), float(coef[1]), residual,
                       d.spec.weyl_exponent, int(j_lo), int(j_hi))
