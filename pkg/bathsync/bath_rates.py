"""Thermal transition rates between levels.

``gamma[i, j]`` is the rate for E_i -> E_j. Downhill transitions carry the stimulated plus
spontaneous factor n + 1, uphill transitions carry n, so every rate matrix produced here
obeys gamma[j, i] = exp((E_j - E_i) / T) * gamma[i, j] for E_j > E_i and relaxes level
populations to the Boltzmann distribution.
"""

import logging

import numpy as np
import pandas as pd

from bathsync.exceptions import RateError

logger = logging.getLogger(__name__)


def bose_occupation(omega, temperature):
    """Mean thermal occupation 1 / (exp(omega / T) - 1) for omega > 0."""
    omega = np.asarray(omega, dtype=float)
    if not temperature > 0:
        raise RateError(f"temperature must be positive, got {temperature}")
    if np.any(omega <= 0):
        raise RateError("Bose occupation needs omega > 0; pass |E_j - E_k|")
    with np.errstate(over="ignore"):
        return (1.0 / np.expm1(omega / temperature))[()]


def gamma_from_dipoles(c2, energies, temperature) -> np.ndarray:
    """Rate matrix from the symmetric coupling table c2[j, k] = c_jk c_kj.

    Downhill rate 2 pi c2 (n + 1), uphill rate 2 pi c2 n with n the Bose occupation of
    the level spacing.
    """
    c2 = np.asarray(c2, dtype=float)
    energies = np.asarray(energies, dtype=float)
    m = energies.shape[0]
    if c2.shape != (m, m):
        raise RateError(f"coupling table must be {m}x{m}, got {c2.shape}")
    if np.any(c2 < 0):
        raise RateError("coupling table must be nonnegative")
    if np.any(np.diag(c2) != 0):
        raise RateError("coupling table must have a zero diagonal")
    if not np.allclose(c2, c2.T, rtol=1e-12, atol=0.0):
        raise RateError("coupling table must be symmetric")

    # delta[i, j] = E_j - E_i
    delta = energies[None, :] - energies[:, None]
    coupled = c2 > 0
    degenerate = coupled & (delta == 0)
    if np.any(degenerate):
        i, j = np.argwhere(degenerate)[0]
        raise RateError(f"levels {i} and {j} are degenerate (E = {energies[i]}) but coupled")

    gamma = np.zeros((m, m))
    omega = np.abs(delta[coupled])
    n = bose_occupation(omega, temperature)
    uphill = delta[coupled] > 0
    gamma[coupled] = 2.0 * np.pi * c2[coupled] * np.where(uphill, n, n + 1.0)
    return gamma


def relaxation_gap(gamma) -> float:
    """Slowest nonzero relaxation rate of the level populations.

    Uses the detailed-balance symmetrization of the population rate matrix, so ``gamma``
    must satisfy detailed balance. Returns 0 when no level is coupled.
    """
    gamma = np.asarray(gamma, dtype=float)
    symmetric = np.sqrt(gamma * gamma.T) - np.diag(gamma.sum(axis=1))
    rates = -np.linalg.eigvalsh(symmetric)
    if rates.max(initial=0.0) <= 0:
        return 0.0
    nonzero = rates[rates > 1e-12 * rates.max()]
    return float(nonzero.min())


def rates_frame(energies, gamma) -> pd.DataFrame:
    """Off-diagonal rates as rows i, j, E_i, E_j, gamma_ij with 1-based level indices."""
    energies = np.asarray(energies, dtype=float)
    m = energies.shape[0]
    i, j = np.nonzero(~np.eye(m, dtype=bool))
    return pd.DataFrame(
        {
            "i": i + 1,
            "j": j + 1,
            "E_i": energies[i],
            "E_j": energies[j],
            "gamma_ij": np.asarray(gamma)[i, j],
        }
    )
