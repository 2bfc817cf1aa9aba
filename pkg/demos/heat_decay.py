"""Smoothing and decay of exp(-t A^gamma) between modulation spaces.

For each norm pair the empirical operator ratio R(t) (sup over a seeded
family) is compared with the envelope t^-sigma on (0, 1] and
exp(-t lambda_0^gamma) on [1, 10].
"""

import math

from anharmonic.estimates import NormPair, decay_profile
from anharmonic.families import build_family
from anharmonic.modulation import ModulationEngine
from anharmonic.oscillator import OscillatorSpec, solve_spectrum

INF = math.inf
seed = 20240611
pairs = [NormPair(2, INF, 2, 2), NormPair(2, 2, 2, 2), NormPair(1, 1, INF, INF)]

for k, ell, gamma, N in [(1, 1, 1.0, 64), (2, 1, 0.5, 128)]:
    d = solve_spectrum(OscillatorSpec(k, ell, gamma), N)
    engine = ModulationEngine(d)
    family = build_family(d, 48, seed=seed)
    print(f"\n(k, ell) = ({k}, {ell}), gamma = {gamma}, lambda_0^gamma = {d.lambda0 ** gamma:.6f}")
    print(f"  {'pair':<22}{'sigma':>7}{'slope':>9}{'raw':>9}{'short x':>9}{'rate':>10}{'long x':>8}")
    for pair in pairs:
        fit = decay_profile(d, gamma, pair, family, engine=engine)
        label = str((pair.p1, pair.q1, pair.p2, pair.q2))
        print(f"  {label:<22}{fit.sigma_predicted:7.3f}{fit.short_slope:9.3f}"
              f"{fit.short_raw_slope:9.3f}{fit.short_bound_factor:9.2f}"
              f"{fit.long_rate:10.5f}{fit.long_bound_factor:8.2f}")
