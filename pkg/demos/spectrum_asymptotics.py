"""Eigenvalue growth of (-d^2/dx^2)^ell + |x|^(2k).

Hermite-Galerkin spectra at N=1200 with the balanced length scale, the fitted
log-log slope on j in [100, 400] against 2 k ell / (k + ell), and a cross-check
of the quartic ground states against the finite-difference oracle.
"""

import time

import numpy as np

from anharmonic.oscillator import (OscillatorSpec, asymptotic_fit, assemble_grid,
                                   eigendecompose, solve_spectrum, turning_point_halfwidth)

print(f"{'(k,ell)':>8} {'trusted':>8} {'slope':>10} {'predicted':>10} {'secs':>6}")
for k, ell in [(1, 1), (2, 1), (1, 2), (2, 2)]:
    spec = OscillatorSpec(k, ell)
    t0 = time.perf_counter()
    d = solve_spectrum(spec, 1200)
    fit = asymptotic_fit(d, 100, 400)
    print(f"{str((k, ell)):>8} {d.trusted_count:8d} {fit.slope:10.5f} {fit.predicted:10.5f} "
          f"{time.perf_counter() - t0:6.1f}")

# the quartic potential has no closed form; compare two unrelated discretizations
spec = OscillatorSpec(2, 1)
dh = solve_spectrum(spec, 400, n_modes=40)
L = turning_point_halfwidth(spec, dh.eigenvalues[9])
dg = eigendecompose(assemble_grid(spec, L, 4000), n_modes=10)
print(f"\nquartic, L = {L:.3f}")
for j in range(10):
    a, b = dh.eigenvalues[j], dg.eigenvalues[j]
    print(f"  lambda_{j}: hermite {a:.12f}  grid {b:.12f}  diff {abs(a - b):.1e}")

# doubling-drift diagnostics: the sextic case converges irregularly
from anharmonic.oscillator import convergence_check
r = convergence_check(OscillatorSpec(3, 1), 200, 200)
print(f"\nsextic N=200: trusted {r.trusted_count}, monotone drift {r.monotone}")
print("drift of modes 0..20:", np.array2string(r.drift[:20], precision=1))
