import numpy as np
import pytest

from anharmonic.modulation import ModulationEngine
from anharmonic.oscillator import OscillatorSpec, solve_spectrum


@pytest.fixture(scope="session")
def harmonic():
    return solve_spectrum(OscillatorSpec(1, 1), 64)


@pytest.fixture(scope="session")
def harmonic_engine(harmonic):
    return ModulationEngine(harmonic)


@pytest.fixture(scope="session")
def quartic():
    # (k, ell) = (2, 1) at gamma = 1/2
    return solve_spectrum(OscillatorSpec(2, 1, 0.5), 128)


@pytest.fixture(scope="session")
def small_harmonic():
    return solve_spectrum(OscillatorSpec(1, 1), 48)


@pytest.fixture(scope="session")
def small_engine(small_harmonic):
    return ModulationEngine(small_harmonic)


@pytest.fixture
def rng():
    seed = 1234
    print(f"seed {seed}")
    return np.random.default_rng(seed)
