"""Symmetric double square well.

The potential is infinite for |x| > a + L, U0 inside the central barrier |x| < a and zero
in the two wells of width L. Bound states come in even/odd doublets; each doublet is one
level of the vertical space, with lambda(E_i) = g(E_i) * sigma_1 and g the half-splitting.

Units: hbar = 1 and the particle mass is fixed so that the ground state of a single
infinite well of width L has energy 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import pandas as pd
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import root_scalar

from bathsync import configuration as settings
from bathsync.bath_rates import gamma_from_dipoles
from bathsync.core import SIGMA_1, BiasSchedule, CouplingOperator, ModelSpec
from bathsync.exceptions import SpectrumError

logger = logging.getLogger(__name__)

WELL_WIDTH_IN_A = 7.0
ROOT_XTOL = 1e-13
GRID_POINTS_PER_NODE = 64
BARRIER_SEARCH_RANGE = (10.0, 400.0)
GRID_INTERVALS = 8192


def _mass(well_width: float) -> float:
    return np.pi**2 / (2.0 * well_width**2)


def _characteristic(energy, parity: str, a: float, well_width: float, barrier_height: float):
    """Matching condition at x = a; zero exactly at a bound state, finite everywhere below U0."""
    mass = _mass(well_width)
    k = np.sqrt(2.0 * mass * energy)
    kappa = np.sqrt(2.0 * mass * np.maximum(barrier_height - energy, 0.0))
    tanh = np.tanh(kappa * a)
    sin, cos = np.sin(k * well_width), np.cos(k * well_width)
    if parity == "even":
        return kappa * tanh * sin + k * cos
    return kappa * sin + k * tanh * cos


def _brackets(parity: str, a: float, well_width: float, barrier_height: float):
    """Energy intervals holding exactly one sign change of the characteristic function."""
    mass = _mass(well_width)
    k_max = np.sqrt(2.0 * mass * barrier_height) * (1.0 - 1e-12)
    n = int(np.ceil(k_max * well_width * GRID_POINTS_PER_NODE / np.pi)) + 2
    energies = np.linspace(0.0, k_max, n)[1:] ** 2 / (2.0 * mass)
    values = _characteristic(energies, parity, a, well_width, barrier_height)
    signs = np.sign(values)
    brackets = [(energies[i], energies[i + 1]) for i in np.nonzero(signs[:-1] * signs[1:] < 0)[0]]
    brackets.extend((energies[i], energies[i]) for i in np.nonzero(values == 0)[0])
    return sorted(brackets)


def count_bound_states(
    barrier_height: float, a: float = 1.0, well_width: float | None = None
) -> int:
    well_width = WELL_WIDTH_IN_A * a if well_width is None else well_width
    return sum(len(_brackets(parity, a, well_width, barrier_height)) for parity in ("even", "odd"))


def _lowest_height_with(count: int, a: float, well_width: float) -> float:
    lo, hi = BARRIER_SEARCH_RANGE
    if count_bound_states(hi, a, well_width) < count:
        raise SpectrumError(f"no barrier height up to {hi} binds {count} states")
    if count_bound_states(lo, a, well_width) >= count:
        raise SpectrumError(f"barrier height {lo} already binds {count} states")
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if count_bound_states(mid, a, well_width) >= count:
            hi = mid
        else:
            lo = mid
    return hi


@lru_cache(maxsize=None)
def tune_barrier_height(
    a: float = 1.0, well_width: float | None = None, bound_states: int = 20
) -> float:
    """Midpoint of the barrier heights that bind exactly ``bound_states`` states."""
    well_width = WELL_WIDTH_IN_A * a if well_width is None else well_width
    lower = _lowest_height_with(bound_states, a, well_width)
    upper = _lowest_height_with(bound_states + 1, a, well_width)
    height = 0.5 * (lower + upper)
    logger.debug(
        f"🧮 barrier heights in [{lower:.6f}, {upper:.6f}) bind {bound_states} states, "
        f"using {height:.6f}"
    )
    return height


@dataclass(frozen=True)
class WellGeometry:
    """Geometry of the double well.

    ``well_width`` defaults to 7a; ``barrier_height`` defaults to the tuned value that binds
    ``bound_states`` states. Pass ``bound_states=None`` to skip the bound-state count check.
    """

    a: float = 1.0
    barrier_height: float | None = None
    well_width: float | None = None
    bound_states: int | None = 20

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"barrier half-width must be positive, got {self.a}")
        if self.well_width is None:
            object.__setattr__(self, "well_width", WELL_WIDTH_IN_A * self.a)
        if self.barrier_height is None:
            if self.bound_states is None:
                raise ValueError("either barrier_height or bound_states is required")
            height = tune_barrier_height(self.a, self.well_width, self.bound_states)
            object.__setattr__(self, "barrier_height", height)
        if not self.barrier_height > 0:
            raise ValueError(f"barrier height must be positive, got {self.barrier_height}")

    @property
    def outer_wall(self) -> float:
        return self.a + self.well_width

    @property
    def mass(self) -> float:
        return _mass(self.well_width)


def default_geometry() -> WellGeometry:
    return WellGeometry(
        a=settings.WELL_A,
        barrier_height=settings.WELL_BARRIER_HEIGHT,
        bound_states=settings.WELL_BOUND_STATES,
    )


@dataclass(frozen=True)
class SpectrumPair:
    E_even: float
    E_odd: float

    @property
    def E_mean(self) -> float:
        return 0.5 * (self.E_odd + self.E_even)

    @property
    def g(self) -> float:
        return 0.5 * (self.E_odd - self.E_even)


@dataclass(frozen=True)
class SpectrumResult:
    geometry: WellGeometry
    pairs: tuple[SpectrumPair, ...]
    dipoles: np.ndarray

    @cached_property
    def energies(self) -> np.ndarray:
        return np.array([pair.E_mean for pair in self.pairs])

    @cached_property
    def splittings(self) -> np.ndarray:
        return np.array([pair.g for pair in self.pairs])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "pair_index": np.arange(1, len(self.pairs) + 1),
                "E_even": [pair.E_even for pair in self.pairs],
                "E_odd": [pair.E_odd for pair in self.pairs],
                "E_mean": self.energies,
                "g": self.splittings,
            }
        )

    def dipoles_frame(self) -> pd.DataFrame:
        n = self.dipoles.shape[0]
        j, k = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
        return pd.DataFrame({"j": j.ravel(), "k": k.ravel(), "x_jk": self.dipoles.ravel()})


def solve_bound_states(
    geom: WellGeometry, max_pairs: int | None = None
) -> tuple[SpectrumPair, ...]:
    """Even/odd doublets below U0, lowest first.

    With ``max_pairs`` only that many doublets are solved and the count check is skipped.
    """
    roots = {}
    for parity in ("even", "odd"):
        brackets = _brackets(parity, geom.a, geom.well_width, geom.barrier_height)
        if max_pairs is not None:
            brackets = brackets[:max_pairs]
        found = []
        for lo, hi in brackets:
            if lo == hi:
                found.append(lo)
                continue
            solution = root_scalar(
                _characteristic,
                args=(parity, geom.a, geom.well_width, geom.barrier_height),
                bracket=(lo, hi),
                method="bisect",
                xtol=ROOT_XTOL,
            )
            if not solution.converged:
                raise SpectrumError(
                    f"{parity} root in [{lo}, {hi}] did not converge: {solution.flag}"
                )
            found.append(solution.root)
        roots[parity] = found

    n_even, n_odd = len(roots["even"]), len(roots["odd"])
    if n_even != n_odd:
        raise SpectrumError(
            f"found {n_even} even and {n_odd} odd bound states below U0 = {geom.barrier_height}"
        )
    if max_pairs is None and geom.bound_states is not None and n_even + n_odd != geom.bound_states:
        raise SpectrumError(
            f"U0 = {geom.barrier_height} binds {n_even + n_odd} states, "
            f"expected {geom.bound_states}; the barrier height is mis-tuned"
        )
    return tuple(SpectrumPair(e, o) for e, o in zip(roots["even"], roots["odd"]))


def infinite_well_dipoles(geom: WellGeometry, n_levels: int) -> np.ndarray:
    """x_jk for a single infinite well of width L, origin at the well edge; zero diagonal."""
    if n_levels < 2:
        raise ValueError(f"need at least two levels, got {n_levels}")
    j, k = np.meshgrid(np.arange(1, n_levels + 1), np.arange(1, n_levels + 1), indexing="ij")
    odd = (j - k) % 2 == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        values = -8.0 * geom.well_width * j * k / (np.pi**2 * (j**2 - k**2) ** 2)
    return np.where(odd, values, 0.0)


@lru_cache(maxsize=16)
def compute_spectrum(geom: WellGeometry) -> SpectrumResult:
    pairs = solve_bound_states(geom)
    result = SpectrumResult(geom, pairs, infinite_well_dipoles(geom, len(pairs)))
    logger.info(
        f"🧮 {len(pairs)} doublets below U0 = {geom.barrier_height:.6f}, "
        f"g from {result.splittings[0]:.4g} to {result.splittings[-1]:.4g}"
    )
    return result


def grid_spectrum(
    geom: WellGeometry, intervals: int = GRID_INTERVALS, n_states: int | None = None
) -> np.ndarray:
    """Lowest eigenvalues of the finite-difference Hamiltonian with Dirichlet walls.

    Grid points that fall on the barrier edge carry U0 / 2.
    """
    n_states = geom.bound_states if n_states is None else n_states
    width = geom.outer_wall
    x, h = np.linspace(-width, width, intervals + 1, retstep=True)
    x = x[1:-1]
    potential = np.where(np.abs(x) < geom.a, geom.barrier_height, 0.0)
    edge = np.isclose(np.abs(x), geom.a, rtol=0.0, atol=1e-9 * h)
    potential = np.where(edge, 0.5 * geom.barrier_height, potential)
    kinetic = 1.0 / (2.0 * geom.mass * h**2)
    diagonal = 2.0 * kinetic + potential
    off_diagonal = np.full(len(x) - 1, -kinetic)
    return eigh_tridiagonal(
        diagonal, off_diagonal, eigvals_only=True, select="i", select_range=(0, n_states - 1)
    )


def build_model(
    q_over_v: float,
    temperature: float,
    b: float = 0.0,
    geom: WellGeometry | None = None,
    bias: BiasSchedule | None = None,
) -> ModelSpec:
    """Double-well model with c_jk c_kj = (q/v)^2 (E_j - E_k)^2 x_jk^2."""
    if q_over_v < 0:
        raise ValueError(f"coupling q/v must be nonnegative, got {q_over_v}")
    spectrum = compute_spectrum(geom or default_geometry())
    energies = spectrum.energies
    c2 = q_over_v**2 * (energies[:, None] - energies[None, :]) ** 2 * spectrum.dipoles**2
    return ModelSpec(
        levels=energies,
        lambdas=spectrum.splittings[:, None, None] * SIGMA_1,
        coupling=CouplingOperator.from_b(b),
        gamma=gamma_from_dipoles(c2, energies, temperature),
        temperature=temperature,
        bias=bias,
    )
