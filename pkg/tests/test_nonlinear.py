import json
import math

import numpy as np
import pytest

from anharmonic.nonlinear import (BLOWUP, NOT_CONTRACTING, SUCCESS, ConfigurationError,
                                  NonlinearProblem, admissibility, etd_solve, lipschitz_probe,
                                  picard_solve, run_manifest, smallness_search, sup_l2_gap,
                                  write_manifest, y_norm, y_profile)
from anharmonic.oscillator import OscillatorSpec
from anharmonic.semigroup import EigenFunctionVector, eigenfunction, propagate

SPEC = OscillatorSpec(1, 1, 1.0)


def problem(d, u0, lam=1.0, beta=1, q=1.5, steps=100, T=10.0):
    return NonlinearProblem(d.spec, beta, lam, u0, 2.0, q, T, steps)


def unit_mnorm(d, engine, j=0):
    phi = eigenfunction(d, j)
    return phi.scaled(1.0 / engine.norm(phi, 2, 1.5))


def test_admissible_cubic(small_harmonic):
    a = admissibility(problem(small_harmonic, None))
    assert a.ok
    assert a.r == math.inf
    assert a.sigma == pytest.approx(1 / 3)


def test_rejects_q_two(small_harmonic):
    a = admissibility(problem(small_harmonic, None, q=2.0))
    assert not a.ok
    assert "2β+1 ≤ q′" in a.reason


def test_rejects_beta_zero(small_harmonic):
    a = admissibility(problem(small_harmonic, None, beta=0))
    assert not a.ok and "beta" in a.reason


def test_rejects_beta_n_condition():
    spec = OscillatorSpec(1, 1, 0.1)
    a = admissibility(NonlinearProblem(spec, 1, 1.0, None, 2.0, 1.2))
    assert not a.ok and "βn/(γℓ)" in a.reason


def test_solvers_require_admissible(small_harmonic):
    bad = problem(small_harmonic, eigenfunction(small_harmonic, 0), q=2.0)
    with pytest.raises(ValueError, match="2β\\+1"):
        etd_solve(bad, small_harmonic)
    with pytest.raises(ValueError):
        picard_solve(bad, small_harmonic)


def test_etd_requires_steps(small_harmonic):
    with pytest.raises(ValueError):
        etd_solve(problem(small_harmonic, eigenfunction(small_harmonic, 0), steps=50),
                  small_harmonic)


def _linear_reference(d, u0, times):
    return np.array([propagate(d, 1.0, t, u0).coeffs for t in times])


def test_linear_limit_both_solvers(small_harmonic, small_engine, rng):
    d = small_harmonic
    u0 = EigenFunctionVector(rng.standard_normal(20) * (1 + np.arange(20)) ** -2.0, d)
    pr = problem(d, u0, lam=0.0)
    te = etd_solve(pr, d)
    tp, rep = picard_solve(pr, d, engine=small_engine)
    ref = _linear_reference(d, u0, te.times)
    assert np.max(np.abs(te.states - ref)) < 1e-10
    assert np.max(np.abs(tp.states - ref)) < 1e-10
    assert rep.iterations == 1 and rep.status == SUCCESS
    np.testing.assert_array_equal(te.states[0], u0.coeffs)


def test_perturbation_oracle(small_harmonic):
    d = small_harmonic
    devs = []
    for eps in (0.05, 0.025):
        te = etd_solve(problem(d, eigenfunction(d, 0).scaled(eps), T=1.0), d)
        n1 = np.linalg.norm(te.states[-1])
        base = eps * math.exp(-1)
        assert base * (1 - 10 * eps**2) <= n1 <= base * (1 + 10 * eps**2)
        devs.append(abs(n1 - base))
    # cubic correction: halving eps divides the deviation by about 8
    assert 6 < devs[0] / devs[1] < 10


def test_etd_first_order(small_harmonic):
    d = small_harmonic
    te = etd_solve(problem(d, eigenfunction(d, 0).scaled(0.5), T=2.0), d)
    subs, drift = np.array(te.drift_history).T
    slope = np.polyfit(np.log(1.0 / subs), np.log(drift), 1)[0]
    assert 0.8 <= slope <= 1.2
    assert drift[-1] < 1e-6


def test_node_continuity_under_refinement(small_harmonic):
    d = small_harmonic
    u0 = eigenfunction(d, 1).scaled(0.5)
    jumps = []
    for steps in (100, 200):
        te = etd_solve(problem(d, u0, steps=steps, T=2.0), d)
        jumps.append(np.max(np.linalg.norm(np.diff(te.states, axis=0), axis=1)))
    assert jumps[1] < 0.6 * jumps[0]


@pytest.fixture(scope="module")
def small_run(small_harmonic, small_engine):
    d = small_harmonic
    pr = problem(d, unit_mnorm(d, small_engine).scaled(1.0))
    tp, rep = picard_solve(pr, d, engine=small_engine)
    return pr, tp, rep


def test_picard_small_data(small_harmonic, small_engine, small_run):
    pr, tp, rep = small_run
    assert rep.status == SUCCESS
    assert rep.contraction_factor < 1
    assert rep.epsilon == pytest.approx(1.0, rel=1e-12)
    assert len(rep.residuals) == rep.iterations
    assert np.all(np.isfinite(tp.states))
    te = etd_solve(pr, small_harmonic)
    assert sup_l2_gap(tp, te) <= 1e-5


def test_y_norm_small_data(small_harmonic, small_engine, small_run):
    pr, tp, rep = small_run
    yp = y_profile(tp, small_harmonic.lambda0, 1.0, 2, 1.5, small_engine)
    assert yp.max() <= 2 * yp[0]
    assert y_norm(tp, small_harmonic.lambda0, 1.0, 2, 1.5, small_engine) == pytest.approx(yp.max())


def test_y_norm_linear_ground_state(small_harmonic, small_engine):
    d = small_harmonic
    phi = eigenfunction(d, 0)
    te = etd_solve(problem(d, phi, lam=0.0), d)
    y = y_norm(te, d.lambda0, 1.0, 2, 1.5, small_engine)
    assert y == pytest.approx(small_engine.norm(phi, 2, 1.5), rel=1e-10)


def test_large_data_fails(small_harmonic, small_engine):
    d = small_harmonic
    pr = problem(d, unit_mnorm(d, small_engine).scaled(4e3))
    tp, rep = picard_solve(pr, d, engine=small_engine)
    assert rep.status in (NOT_CONTRACTING, BLOWUP)
    te = etd_solve(pr, d)
    assert te.status == BLOWUP
    with pytest.raises(ValueError):
        y_norm(te, d.lambda0, 1.0, 2, 1.5, small_engine)


def test_complex_lambda(small_harmonic, small_engine):
    d = small_harmonic
    pr = problem(d, unit_mnorm(d, small_engine).scaled(1.0), lam=1j)
    tp, rep = picard_solve(pr, d, engine=small_engine, probe=False)
    te = etd_solve(pr, d)
    assert rep.status == SUCCESS
    assert np.max(np.abs(tp.states.imag)) > 1e-6
    assert sup_l2_gap(tp, te) <= 1e-5


def test_smallness_linear_returns_bound(small_harmonic, small_engine):
    d = small_harmonic
    res = smallness_search(problem(d, eigenfunction(d, 0), lam=0.0), d, engine=small_engine,
                           eps_hi=3.0)
    assert res.epsilon == 3.0


def test_smallness_focusing_and_defocusing(small_harmonic, small_engine):
    d = small_harmonic
    base = problem(d, eigenfunction(d, 0))
    foc = smallness_search(base, d, engine=small_engine, eps_hi=16.0)
    assert foc.epsilon > 0 and foc.report.contraction_factor <= 0.5
    # halving log: every tested scale above the returned one failed
    assert all(s != SUCCESS or f > 0.5 for e, f, s in foc.log[:-1])
    # doubling the data degrades the contraction factor
    eps = foc.epsilon
    factors = []
    for scale in (eps / 4, eps / 2, eps, 2 * eps):
        _, rep = picard_solve(base.with_data(unit_mnorm(d, small_engine).scaled(scale)), d,
                              engine=small_engine, probe=False)
        factors.append(rep.contraction_factor if rep.status == SUCCESS else math.inf)
    print("focusing eps", eps, "factors", factors)
    assert all(b >= a for a, b in zip(factors, factors[1:]))
    defoc = smallness_search(NonlinearProblem(d.spec, 1, -1.0, eigenfunction(d, 0), 2.0, 1.5),
                             d, engine=small_engine, eps_hi=16.0)
    print("defocusing eps", defoc.epsilon, "focusing eps", eps)
    assert defoc.epsilon >= eps


def test_smallness_configuration_error(small_harmonic, small_engine):
    d = small_harmonic
    with pytest.raises(ConfigurationError):
        smallness_search(problem(d, eigenfunction(d, 0)), d, engine=small_engine,
                         eps_hi=4e3, eps_lo=1e3)


def test_lipschitz_scaling(small_harmonic, small_engine):
    d = small_harmonic
    pr = problem(d, eigenfunction(d, 0))
    radii = np.array([0.5, 1.0, 2.0, 4.0])
    lips = [lipschitz_probe(pr, d, R, small_engine, seed=3) for R in radii]
    slope = np.polyfit(np.log(radii), np.log(lips), 1)[0]
    assert abs(slope - 2) <= 0.3


def test_exports(tmp_path, small_run):
    pr, tp, rep = small_run
    tp.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,j,re,im"
    assert len(lines) == 1 + tp.states.size
    man = run_manifest(pr, {"picard": tp.status}, {"epsilon": rep.epsilon},
                       {"contraction": rep.to_dict()})
    write_manifest(tmp_path / "m.json", man)
    back = json.loads((tmp_path / "m.json").read_text())
    assert back["schema_version"] == 1
    assert back["problem"]["q"] == 1.5 and back["statuses"]["picard"] == SUCCESS
