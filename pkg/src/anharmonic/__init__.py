"""Spectral, semigroup and modulation-space numerics for A = (-Delta)^ell + |x|^(2k)."""

from .oscillator import (ConvergenceError, GridBasis, HermiteBasis, OscillatorSpec,
                         SpectralDecomposition, asymptotic_fit, assemble_grid, assemble_hermite,
                         convergence_check, eigendecompose, solve_spectrum)
from .semigroup import EigenFunctionVector, analyze, eigenfunction, propagate, synthesize
from .modulation import ModulationEngine, modulation_norm, stft
from .estimates import NormPair, decay_profile, sigma_exponent
from .nonlinear import NonlinearProblem, admissibility, etd_solve, picard_solve, smallness_search

__version__ = "0.1.0"
