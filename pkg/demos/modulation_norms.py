"""Short-time Fourier transform and modulation norms on the harmonic basis.

Measures the Plancherel constant of the e^{-i y xi} convention, checks that
M^{2,2} is a fixed multiple of L^2, and compares M^{2,2}_{v^m} with the
anharmonic Sobolev norm H^m over a seeded family.
"""

import math

import numpy as np

from anharmonic.families import build_family
from anharmonic.modulation import ModulationEngine, norm_equivalence_report, sobolev_norm
from anharmonic.oscillator import OscillatorSpec, solve_spectrum
from anharmonic.semigroup import eigenfunction

d = solve_spectrum(OscillatorSpec(1, 1), 96)
engine = ModulationEngine(d)
print(f"kappa = {engine.kappa:.15f}  (2 pi = {2 * math.pi:.15f})")

# |V_g Phi_0 (x, 0)| = exp(-x^2/4) for the matched Gaussian window
V = engine.field(eigenfunction(d, 0))
i0 = int(np.argmin(np.abs(V.grid.xi_points)))
x = V.grid.x_points
print("max | |V(x,0)| - exp(-x^2/4) | =", np.max(np.abs(np.abs(V.values[:, i0]) - np.exp(-x**2 / 4))))

seed = 20240611
print(f"family seed {seed}")
for m in (0.0, 1.0, 2.0, 4.0):
    spreads = [norm_equivalence_report(engine, build_family(d, n, seed=seed), m).spread
               for n in (50, 100)]
    print(f"m = {m}: spread over 50 = {spreads[0]:.4f}, over 100 = {spreads[1]:.4f}")

fam = build_family(d, 48, seed=seed)
sup = np.array([engine.norm(f, math.inf, math.inf) for f in fam])
sob = np.array([sobolev_norm(d, f, 4.0) for f in fam])
print(f"embedding constant sup|V f| / ||f||_H^4 <= {np.max(sup / sob):.6f}")
