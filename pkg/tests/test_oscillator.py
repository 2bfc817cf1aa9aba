import math

import numpy as np
import pytest

from anharmonic.oscillator import (ConvergenceError, GridBasis, HermiteBasis, OscillatorSpec,
                                   asymptotic_fit, assemble_grid, assemble_hermite,
                                   balanced_scale, convergence_check, eigendecompose,
                                   hermite_functions, solve_spectrum, turning_point_halfwidth)


def test_spec_validation():
    with pytest.raises(ValueError):
        OscillatorSpec(0, 1)
    with pytest.raises(ValueError):
        OscillatorSpec(1, 0)
    with pytest.raises(ValueError):
        OscillatorSpec(1, 1, gamma=0.0)
    with pytest.raises(NotImplementedError):
        OscillatorSpec(1, 1, dim=2)


@pytest.mark.parametrize("k,ell,expected", [(1, 1, 1.0), (2, 1, 4 / 3), (1, 2, 4 / 3), (2, 2, 2.0)])
def test_weyl_exponent(k, ell, expected):
    assert OscillatorSpec(k, ell).weyl_exponent == pytest.approx(expected, abs=1e-15)


def test_harmonic_matrix_is_diagonal():
    m = assemble_hermite(OscillatorSpec(1, 1), 8)
    np.testing.assert_allclose(m.entries, np.diag(2.0 * np.arange(8) + 1), atol=1e-13)


def test_quartic_ground_entry():
    m = assemble_hermite(OscillatorSpec(2, 1), 8)
    # <x^4> = 3/4 by Gauss-Hermite quadrature, kinetic part 1/2
    xg, wg = np.polynomial.hermite.hermgauss(20)
    x4 = float(np.sum(wg * xg**4) / np.sqrt(np.pi))
    assert x4 == pytest.approx(0.75, abs=1e-14)
    assert m.entries[0, 0] == pytest.approx(0.5 + x4, abs=1e-13)


def test_hermite_matrix_symmetric_positive_diagonal():
    for k, ell in ((2, 1), (1, 2), (3, 2)):
        e = assemble_hermite(OscillatorSpec(k, ell), 40, 0.8).entries
        assert np.max(np.abs(e - e.T)) <= 1e-12 * np.max(np.abs(e))
        assert np.all(np.diag(e) > 0)


def test_hermite_precondition():
    with pytest.raises(ValueError):
        assemble_hermite(OscillatorSpec(1, 1), 3)


def test_grid_precondition():
    with pytest.raises(ValueError):
        assemble_grid(OscillatorSpec(1, 1), -1.0, 100)
    with pytest.raises(ValueError):
        assemble_grid(OscillatorSpec(1, 1), 5.0, 32)


def test_grid_harmonic_ground_state():
    d = eigendecompose(assemble_grid(OscillatorSpec(1, 1), 10.0, 2000), n_modes=5)
    assert abs(d.eigenvalues[0] - 1.0) < 1e-6


def test_grid_matrix_symmetric():
    e = assemble_grid(OscillatorSpec(2, 2), 4.0, 80).entries
    assert np.max(np.abs(e - e.T)) <= 1e-12 * np.max(np.abs(e))
    assert np.all(np.diag(e) > 0)


def test_hermite_vs_grid_fixed_halfwidth():
    spec = OscillatorSpec(2, 1)
    dh = solve_spectrum(spec, 400, n_modes=40)
    dg = eigendecompose(assemble_grid(spec, 8.0, 4000), n_modes=10)
    assert np.max(np.abs(dh.eigenvalues[:10] - dg.eigenvalues[:10])) <= 1e-6


def test_turning_point_rule():
    spec = OscillatorSpec(2, 1)
    L = turning_point_halfwidth(spec, 20.0)
    assert L ** 4 >= 4 * 20.0


def test_harmonic_eigendecompose_exact():
    d = eigendecompose(assemble_hermite(OscillatorSpec(1, 1), 64), n_modes=5)
    np.testing.assert_allclose(d.eigenvalues, [1, 3, 5, 7, 9], atol=1e-10)


def test_eigenvectors_orthonormal(quartic):
    V = quartic.eigenvectors
    np.testing.assert_allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-10)


def test_grid_eigenvectors_orthonormal():
    d = eigendecompose(assemble_grid(OscillatorSpec(2, 1), 6.0, 1500), n_modes=12)
    V = d.eigenvectors
    np.testing.assert_allclose(V.T @ V, np.eye(12), atol=1e-10)


def test_decomposition_invariants(quartic):
    ev = quartic.trusted_eigenvalues
    assert ev[0] > 0
    assert np.all(np.diff(ev) > 0)
    assert quartic.trusted_count <= quartic.basis.size


def test_decomposition_immutable(harmonic):
    with pytest.raises(ValueError):
        harmonic.eigenvalues[0] = 2.0


def test_n_modes_bounds():
    m = assemble_hermite(OscillatorSpec(1, 1), 16)
    with pytest.raises(ValueError):
        eigendecompose(m, n_modes=17)


def test_convergence_check_harmonic():
    r = convergence_check(OscillatorSpec(1, 1), 64, 64)
    assert r.trusted_count >= 30
    assert r.drift[0] < 1e-9


def test_convergence_ground_state_drift():
    for k, ell in ((2, 1), (1, 2), (2, 2)):
        spec = OscillatorSpec(k, ell)
        r = convergence_check(spec, HermiteBasis(64, balanced_scale(spec, 64)), 10)
        assert r.drift[0] < 1e-9


def test_convergence_sextic_flags_irregular_drift():
    r = convergence_check(OscillatorSpec(3, 1), 200, 200)
    assert 0 < r.trusted_count < 200
    assert r.monotone is False


def test_balanced_scale_improves_trust():
    spec = OscillatorSpec(2, 1)
    plain = convergence_check(spec, HermiteBasis(200, 1.0), 200).trusted_count
    bal = convergence_check(spec, HermiteBasis(200, balanced_scale(spec, 200)), 200).trusted_count
    assert bal > plain


def test_hermite_functions_orthonormal():
    x = np.linspace(-15, 15, 3001)
    H = hermite_functions(x, 30, 1.0)
    G = H.T @ H * (x[1] - x[0])
    np.testing.assert_allclose(G, np.eye(30), atol=1e-10)
    np.testing.assert_allclose(H[:, 0], np.pi ** -0.25 * np.exp(-x**2 / 2), atol=1e-14)


def test_asymptotic_fit_window_checks(harmonic):
    with pytest.raises(ValueError):
        asymptotic_fit(harmonic, 10, 20)
    with pytest.raises(ValueError):
        asymptotic_fit(harmonic, 0, 30)
    with pytest.raises(ValueError):
        asymptotic_fit(harmonic, 10, harmonic.trusted_count + 1)


def test_asymptotic_fit_harmonic():
    d = solve_spectrum(OscillatorSpec(1, 1), 256)
    fit = asymptotic_fit(d, 100, 250)
    assert fit.predicted == 1.0
    assert abs(fit.slope - 1.0) < 0.05


def test_basis_keys_distinct():
    keys = {HermiteBasis(64).key(), HermiteBasis(128).key(), HermiteBasis(64, 0.5).key(),
            GridBasis(5.0, 64).key(), GridBasis(5.0, 128).key()}
    assert len(keys) == 5
