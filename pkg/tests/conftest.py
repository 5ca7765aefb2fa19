import numpy as np
import pytest

from bathsync.bath_rates import gamma_from_dipoles
from bathsync.core import BiasSchedule, CouplingOperator, DensityState, ModelSpec
from bathsync.doublewell import compute_spectrum, default_geometry


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_spec(rng, n_levels=None, dim=2, bias=False):
    """A valid model: random Hermitian lambdas, random symmetric couplings, balanced rates."""
    m = int(n_levels or rng.integers(1, 7))
    levels = np.cumsum(rng.uniform(0.5, 2.0, size=m))
    lambdas = np.array([random_hermitian(rng, dim, 0.5) for _ in range(m)])
    if dim == 2:
        coupling = CouplingOperator.from_b(rng.uniform(-0.5, 0.5))
    else:
        coupling = CouplingOperator(zeta=np.eye(dim) + random_hermitian(rng, dim, 0.2))
    c2 = 0.5 * rng.uniform(size=(m, m))
    c2 = 0.5 * (c2 + c2.T)
    np.fill_diagonal(c2, 0.0)
    temperature = rng.uniform(0.5, 5.0)
    schedule = None
    if bias:
        schedule = BiasSchedule(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0, 0.5, "linear-ramp")
    return ModelSpec(
        levels=levels,
        lambdas=lambdas,
        coupling=coupling,
        gamma=gamma_from_dipoles(c2, levels, temperature),
        temperature=temperature,
        bias=schedule,
    )


def random_state(rng, n_levels, dim=2):
    """A full-rank state with unit total trace."""
    a = rng.normal(size=(n_levels, dim, dim)) + 1j * rng.normal(size=(n_levels, dim, dim))
    rhos = a @ a.conj().swapaxes(-1, -2)
    rhos /= np.real(np.trace(rhos, axis1=1, axis2=2)).sum()
    return DensityState(rhos)


def two_level_spec(g=(0.3, 0.7), levels=(1.0, 2.0), temperature=1.0, c2=0.0, b=0.0, bias=None):
    levels = np.asarray(levels, dtype=float)
    m = len(levels)
    sigma_1 = np.array([[0, 1], [1, 0]], dtype=complex)
    table = np.full((m, m), c2)
    np.fill_diagonal(table, 0.0)
    return ModelSpec(
        levels=levels,
        lambdas=np.array([gi * sigma_1 for gi in g]),
        coupling=CouplingOperator.from_b(b),
        gamma=gamma_from_dipoles(table, levels, temperature),
        temperature=temperature,
        bias=bias,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def spectrum():
    return compute_spectrum(default_geometry())
