"""Seeded test families mixing eigen-aligned and generic directions."""

from __future__ import annotations

import numpy as np

from .oscillator import SpectralDecomposition
from .semigroup import EigenFunctionVector, analyze, eigenfunction


def gaussian_packet(x, center, width, frequency):
    """L2-normalized exp(-(x - center)^2 / (2 width^2) + i frequency x)."""
    g = np.exp(-0.5 * ((x - center) / width) ** 2 + 1j * frequency * x)
    return g / np.sqrt(width * np.sqrt(np.pi))


def build_family(d: SpectralDecomposition, size: int, seed: int = 0,
                 random_modes: int = 32) -> list[EigenFunctionVector]:
    """Eigenfunctions, modulated Gaussians and random decaying coefficient vectors.

    The three groups are filled in equal thirds (eigenfunctions first take any
    remainder). Gaussian centers, widths and frequencies are drawn relative to
    the ground-state extents lambda_0^(1/2k) and lambda_0^(1/2ell). Members
    are a deterministic function of ``(size, seed)`` and the decomposition.
    """
    if size < 1:
        raise ValueError("family size must be positive")
    rng = np.random.default_rng(seed)
    n_e = -(-size // 3)
    n_g = -(-(size - n_e) // 2)
    n_r = size - n_e - n_g
    if n_e > d.trusted_count:
        raise ValueError(f"family needs {n_e} eigenfunctions, only {d.trusted_count} trusted")
    family = [eigenfunction(d, j) for j in range(n_e)]
    rx = d.lambda0 ** (1.0 / (2 * d.spec.k))
    rxi = d.lambda0 ** (1.0 / (2 * d.spec.ell))
    for _ in range(n_g):
        center = rng.uniform(-1.0, 1.0) * rx
        width = rng.uniform(0.5, 1.0) / rxi
        freq = rng.uniform(-1.0, 1.0) * rxi
        f = analyze(d, gaussian_packet(d.grid.x, center, width, freq))
        if not f.trusted:
            raise ValueError("Gaussian family member is not resolved by the trusted modes")
        family.append(f)
    n_c = min(random_modes, d.trusted_count)
    decay = (1.0 + np.arange(n_c)) ** -2.0
    for _ in range(n_r):
        c = rng.standard_normal(n_c) * decay
        family.append(EigenFunctionVector(c / np.linalg.norm(c), d))
    return family
