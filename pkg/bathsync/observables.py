"""Observables of density states and trajectories.

Batch functions take state stacks of shape (..., M, d, d). Time-series functions take
uniformly sampled ``times`` and the matching ``values``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.fft import rfft
from scipy.signal import find_peaks
from scipy.signal.windows import hann
from scipy.special import entr

from bathsync.core import EIGENVALUE_FLOOR, SIGMA_1, DensityState, ModelSpec
from bathsync.exceptions import InvariantViolation, NoDominantLineError

logger = logging.getLogger(__name__)

LINE_THRESHOLD = 5.0
ZERO_PADDING = 8
LINE_SEPARATION_BINS = 4
SIGMA_1_FORM_TOL = 1e-12
FLAT_SIGNAL = 1e-12


def hermitized(rhos: np.ndarray) -> np.ndarray:
    return 0.5 * (rhos + np.conj(np.swapaxes(rhos, -1, -2)))


def p_left(rhos: np.ndarray) -> np.ndarray:
    """Probability of flavor 0 (the left well), summed over levels."""
    return np.real(rhos[..., 0, 0]).sum(axis=-1)


def populations(rhos: np.ndarray) -> np.ndarray:
    return np.real(np.trace(rhos, axis1=-2, axis2=-1))


def level_eigenvalues(rhos: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(hermitized(rhos))


def entropy(rhos: np.ndarray, eigenvalues: np.ndarray | None = None) -> np.ndarray:
    """-sum_i Tr[rho_i ln rho_i] with 0 ln 0 = 0.

    Eigenvalues in [EIGENVALUE_FLOOR, 0) count as 0; anything lower is a positivity violation.
    """
    if eigenvalues is None:
        eigenvalues = level_eigenvalues(rhos)
    lowest = float(np.min(eigenvalues)) if np.size(eigenvalues) else 0.0
    if lowest < EIGENVALUE_FLOOR:
        raise InvariantViolation(
            f"entropy of a non-positive state: minimum eigenvalue {lowest:.3g} < {EIGENVALUE_FLOOR}"
        )
    return entr(np.clip(eigenvalues, 0.0, 1.0)).sum(axis=(-2, -1))


@dataclass(frozen=True)
class Observables:
    p_left: float
    entropy: float
    populations: np.ndarray


def observables(state: DensityState) -> Observables:
    rhos = state.rhos
    return Observables(
        p_left=float(p_left(rhos)),
        entropy=float(entropy(rhos)),
        populations=populations(rhos),
    )


def _sample_step(times: np.ndarray) -> float:
    times = np.asarray(times, dtype=float)
    if times.shape[0] < 4:
        raise ValueError(f"need at least 4 samples, got {times.shape[0]}")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
        raise ValueError("time series must be uniformly sampled")
    return float(steps[0])


def _windowed_spectrum(values: np.ndarray, n_fft: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    signal = (values - values.mean()) * hann(values.shape[0], sym=False)
    return np.abs(rfft(signal, n=n_fft))


def dominant_frequency(times, values) -> float:
    """Angular frequency of the strongest spectral line of ``values``.

    Hann window, zero padding and quadratic interpolation of the log magnitude around the
    peak bin.
    """
    dt = _sample_step(times)
    if np.ptp(values) < FLAT_SIGNAL:
        raise NoDominantLineError("signal is constant")
    n_fft = ZERO_PADDING * len(values)
    magnitude = _windowed_spectrum(values, n_fft)
    median = np.median(magnitude[1:])
    peak = int(np.argmax(magnitude[1:])) + 1
    if not magnitude[peak] > LINE_THRESHOLD * median:
        raise NoDominantLineError(
            f"strongest line is {magnitude[peak] / median if median > 0 else 0.0:.3g}x the median "
            f"spectral magnitude, need {LINE_THRESHOLD}x"
        )
    # below one cycle per record the peak is the window's DC lobe around a drift, not a line
    if peak < ZERO_PADDING:
        raise NoDominantLineError(
            f"strongest component completes {peak / ZERO_PADDING:.2g} cycles over the run, "
            "a trend rather than an oscillation"
        )
    offset = 0.0
    if 1 < peak < magnitude.shape[0] - 1:
        alpha, beta, gamma = np.log(magnitude[peak - 1 : peak + 2])
        curvature = alpha - 2.0 * beta + gamma
        if curvature < 0:
            offset = 0.5 * (alpha - gamma) / curvature
    return 2.0 * np.pi * (peak + offset) / (n_fft * dt)


def spectral_lines(times, values, threshold: float = LINE_THRESHOLD) -> np.ndarray:
    """Angular frequencies of local spectral maxima above ``threshold`` x the median, ascending."""
    dt = _sample_step(times)
    if np.ptp(values) < FLAT_SIGNAL:
        return np.array([])
    n = len(values)
    magnitude = _windowed_spectrum(values, n)
    median = np.median(magnitude[1:])
    peaks, _ = find_peaks(magnitude, height=threshold * median, distance=LINE_SEPARATION_BINS)
    peaks = peaks[peaks > 0]
    return 2.0 * np.pi * peaks / (n * dt)


def estimate_frequency(traj) -> float:
    """Dominant angular frequency of a trajectory's P_left."""
    return dominant_frequency(traj.times, traj.p_left)


def sigma_1_splittings(spec: ModelSpec) -> np.ndarray:
    """g(E_i) for lambda(E_i) = g(E_i) sigma_1; rejects any other form."""
    if spec.dim != 2:
        raise ValueError(f"sigma_1 form needs d = 2, got d = {spec.dim}")
    g = np.real(spec.lambdas[:, 0, 1])
    residual = np.max(np.abs(spec.lambdas - g[:, None, None] * SIGMA_1))
    if residual > SIGMA_1_FORM_TOL:
        raise ValueError(f"lambdas are not of the form g*sigma_1 (residual {residual:.3g})")
    return g


def thermal_average_frequency(spec: ModelSpec) -> float:
    """sum_j p_j 2|g(E_j)| with Boltzmann weights p_j."""
    return float(np.sum(spec.boltzmann_weights() * 2.0 * np.abs(sigma_1_splittings(spec))))


def amplitude_decay_per_period(times, values, omega: float) -> float:
    """Fractional loss of peak-to-peak amplitude per period, log-linear fit over whole periods."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    cycle = np.floor((times - times[0]) * omega / (2.0 * np.pi)).astype(int)
    complete = int(cycle.max())
    if complete < 2:
        return float("nan")
    spans = np.array([np.ptp(values[cycle == k]) for k in range(complete)])
    if np.any(spans <= 0):
        return float("nan")
    slope = np.polyfit(np.arange(complete), np.log(spans), 1)[0]
    return float(-np.expm1(slope))


def entropy_rate(times, values) -> float:
    """Least-squares slope of ``values`` over the final third of the run."""
    times = np.asarray(times, dtype=float)
    start = (2 * times.shape[0]) // 3
    if times.shape[0] - start < 2:
        return float("nan")
    return float(np.polyfit(times[start:], np.asarray(values, dtype=float)[start:], 1)[0])


def transition_width(times, p_right) -> float:
    """Time from P_right first reaching 0.25 to first reaching 0.75; inf if it never does."""
    times = np.asarray(times, dtype=float)
    p_right = np.asarray(p_right, dtype=float)
    quarter = np.nonzero(p_right >= 0.25)[0]
    if quarter.size == 0:
        return float("inf")
    three_quarters = np.nonzero(p_right[quarter[0] :] >= 0.75)[0]
    if three_quarters.size == 0:
        return float("inf")
    return float(times[quarter[0] + three_quarters[0]] - times[quarter[0]])
