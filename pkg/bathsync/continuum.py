"""Flavor continuum discretized on an energy mesh.

Stands in for neutrino-style spectra: a two-flavor system whose vacuum splitting falls off
with energy, g(E) = g0 * E_ref / (E + E_ref), collisionally coupled between every pair of
energy bins with the same strength.
"""

import numpy as np

from bathsync.bath_rates import gamma_from_dipoles
from bathsync.core import SIGMA_1, CouplingOperator, ModelSpec


def continuum_mesh(n_levels: int, e_max: float) -> np.ndarray:
    """Midpoints of ``n_levels`` equal bins on (0, e_max)."""
    if n_levels < 1:
        raise ValueError(f"need at least one level, got {n_levels}")
    width = e_max / n_levels
    return (np.arange(1, n_levels + 1) - 0.5) * width


def discretized_continuum_model(
    n_levels: int,
    temperature: float = 5.0,
    e_max: float | None = None,
    g0: float = 0.05,
    e_ref: float | None = None,
    coupling: float = 1.0,
    b: float = 0.0,
) -> ModelSpec:
    """``e_max`` defaults to 8T and ``e_ref`` to 4T; c_jk c_kj = coupling^2 for every j != k."""
    e_max = 8.0 * temperature if e_max is None else e_max
    e_ref = 4.0 * temperature if e_ref is None else e_ref
    energies = continuum_mesh(n_levels, e_max)
    splittings = g0 * e_ref / (energies + e_ref)
    c2 = np.full((n_levels, n_levels), float(coupling) ** 2)
    np.fill_diagonal(c2, 0.0)
    return ModelSpec(
        levels=energies,
        lambdas=splittings[:, None, None] * SIGMA_1,
        coupling=CouplingOperator.from_b(b),
        gamma=gamma_from_dipoles(c2, energies, temperature),
        temperature=temperature,
    )
