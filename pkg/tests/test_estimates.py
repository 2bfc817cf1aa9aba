import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anharmonic.estimates import (NormPair, decay_profile, multilinear_ratio, operator_ratio,
                                  projection_bound_probe, sigma_exponent)
from anharmonic.families import build_family
from anharmonic.semigroup import eigenfunction, synthesize

INF = math.inf
exps = st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0, 4.0, INF])


def test_sigma_examples():
    assert sigma_exponent(NormPair(2, INF, 2, 2), 1, 1, 1.0) == pytest.approx(0.25, abs=1e-15)
    assert sigma_exponent(NormPair(INF, INF, 1, 1), 2, 1, 1.0) == pytest.approx(0.75, abs=1e-15)
    p = NormPair(2, INF, 2, 2)
    assert p.p_tilde == INF and p.inv_q_tilde == 0.5


@settings(max_examples=100, deadline=None)
@given(exps, exps, exps, exps, st.integers(1, 3), st.integers(1, 3), st.floats(0.1, 2))
def test_sigma_properties(p1, q1, p2, q2, k, ell, gamma):
    pair = NormPair(p1, q1, p2, q2)
    s = sigma_exponent(pair, k, ell, gamma)
    assert s >= 0
    assert s == sigma_exponent(pair.reduced(), k, ell, gamma)
    if p2 >= p1 and q2 >= q1:
        assert s == 0


def test_pair_validation():
    with pytest.raises(ValueError):
        NormPair(0, 1, 1, 1)


def test_operator_ratio_ground_state(harmonic, harmonic_engine):
    pair = NormPair(2, 1.5, 2, 1.5)
    r = operator_ratio(harmonic, 1.0, 1.0, pair, [eigenfunction(harmonic, 0)], harmonic_engine)
    assert r == pytest.approx(math.exp(-1), rel=1e-6)
    with pytest.raises(ValueError):
        operator_ratio(harmonic, 1.0, 1.0, pair, [], harmonic_engine)


def test_operator_ratio_small_time(harmonic, harmonic_engine):
    fam = build_family(harmonic, 24, seed=2)
    r = operator_ratio(harmonic, 1.0, 1e-3, NormPair(2, 2, 2, 2), fam, harmonic_engine)
    assert abs(r - 1) < 0.05


def test_operator_ratio_monotone_eigen_family(harmonic, harmonic_engine):
    fam = [eigenfunction(harmonic, j) for j in range(8)]
    pair = NormPair(2, INF, 2, 2)
    rs = [operator_ratio(harmonic, 1.0, t, pair, fam, harmonic_engine)
          for t in (0.01, 0.1, 0.5, 1, 2, 5)]
    assert np.all(np.diff(rs) <= 0)


@pytest.fixture(scope="module")
def harmonic_fits(harmonic, harmonic_engine):
    fam = build_family(harmonic, 48, seed=20240611)
    return {name: decay_profile(harmonic, 1.0, pair, fam, engine=harmonic_engine)
            for name, pair in (("quarter", NormPair(2, INF, 2, 2)), ("zero", NormPair(2, 2, 2, 2)))}


def test_decay_envelopes(harmonic_fits):
    fit = harmonic_fits["quarter"]
    assert fit.sigma_predicted == pytest.approx(0.25)
    assert fit.short_bound_factor <= 10
    assert fit.long_bound_factor <= 10
    assert fit.short_residual < 0.7 and fit.long_residual < 0.7


def test_decay_sigma_zero_slope(harmonic_fits):
    fit = harmonic_fits["zero"]
    assert fit.sigma_predicted == 0
    assert -0.05 <= fit.short_slope <= 1e-12  # zero up to round-off


def test_decay_ratios_nonincreasing(harmonic_fits):
    for fit in harmonic_fits.values():
        assert np.all(np.diff(fit.ratios) <= 1e-12 * fit.ratios[:-1])


def test_long_rate_eigen_family(quartic):
    fam = [eigenfunction(quartic, j) for j in range(12)]
    fit = decay_profile(quartic, 0.5, NormPair(2, 2, 2, 2), fam)
    assert fit.long_rate == pytest.approx(quartic.lambda0 ** 0.5, rel=0.02)


def test_decay_grid_validation(harmonic, harmonic_engine):
    fam = [eigenfunction(harmonic, 0)]
    with pytest.raises(ValueError):
        decay_profile(harmonic, 1.0, NormPair(2, 2, 2, 2), fam, t_grid=[0.1, 1, 10],
                      engine=harmonic_engine)


def test_decay_exports(tmp_path, harmonic_fits):
    fit = harmonic_fits["quarter"]
    fit.to_csv(tmp_path / "d.csv")
    fit.to_json(tmp_path / "d.json")
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "t,R,predicted"
    import json
    s = json.loads((tmp_path / "d.json").read_text())
    assert s["schema_version"] == 1 and s["sigma_predicted"] == 0.25


def test_multilinear_relation(harmonic, harmonic_engine):
    f = synthesize(harmonic, eigenfunction(harmonic, 0))
    r = multilinear_ratio(f, 1, 2, 1.5, INF, harmonic_engine)
    assert np.isfinite(r) and r > 0
    with pytest.raises(ValueError):
        multilinear_ratio(f, 1, 2, 1.5, 2.0, harmonic_engine)


@pytest.mark.parametrize("c", [7.0, -0.3, 2j])
def test_multilinear_scale_invariance(harmonic, harmonic_engine, c):
    f = synthesize(harmonic, build_family(harmonic, 9, seed=4)[5])
    a = multilinear_ratio(f, 1, 2, 1.5, INF, harmonic_engine)
    b = multilinear_ratio(c * f, 1, 2, 1.5, INF, harmonic_engine)
    assert b == pytest.approx(a, rel=1e-10)


def test_projection_probe(harmonic, harmonic_engine):
    pair = NormPair(2, 2, 2, 2)
    v = projection_bound_probe(harmonic, 3, pair, 0.0, [eigenfunction(harmonic, 3)], harmonic_engine)
    assert np.isfinite(v) and v == pytest.approx(1.0, rel=1e-10)
    fam = build_family(harmonic, 30, seed=9)
    probes = [projection_bound_probe(harmonic, j, NormPair(2, INF, 2, 2), 4.0, fam, harmonic_engine)
              for j in range(10)]
    assert np.all(np.diff(probes) <= 0)
    with pytest.raises(ValueError):
        projection_bound_probe(harmonic, harmonic.trusted_count, pair, 0.0, fam, harmonic_engine)
