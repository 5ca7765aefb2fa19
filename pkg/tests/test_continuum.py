import numpy as np
import pytest

from bathsync.continuum import continuum_mesh, discretized_continuum_model
from bathsync.core import FlavorMatrix, thermal_initial_state, validate_model
from bathsync.evolution import propagate
from bathsync.observables import estimate_frequency, spectral_lines, thermal_average_frequency


def _run(spec, periods, samples):
    omega = thermal_average_frequency(spec)
    initial = thermal_initial_state(spec, FlavorMatrix.flavor_projector(0))
    return omega, propagate(spec, initial, periods * 2 * np.pi / omega, samples=samples)


def test_mesh_midpoints():
    np.testing.assert_allclose(continuum_mesh(4, 8.0), [1.0, 3.0, 5.0, 7.0])
    with pytest.raises(ValueError):
        continuum_mesh(0, 8.0)


def test_model_is_valid():
    spec = discretized_continuum_model(30)

    assert validate_model(spec) == []
    assert spec.n_levels == 30
    # splittings fall off with energy
    assert np.all(np.diff(np.real(spec.lambdas[:, 0, 1])) < 0)


def test_strong_coupling_synchronizes():
    omega, trajectory = _run(discretized_continuum_model(30, coupling=1.0), 10, 1024)
    assert estimate_frequency(trajectory) == pytest.approx(omega, rel=0.02)


def test_weak_coupling_shows_many_lines():
    _, trajectory = _run(discretized_continuum_model(20, coupling=1e-4), 60, 4096)
    assert len(spectral_lines(trajectory.times, trajectory.p_left)) >= 3


def test_result_is_insensitive_to_the_mesh():
    coarse_omega, coarse = _run(discretized_continuum_model(20, coupling=1.0), 10, 1024)
    fine_omega, fine = _run(discretized_continuum_model(40, coupling=1.0), 10, 1024)

    assert fine_omega == pytest.approx(coarse_omega, rel=0.01)
    assert estimate_frequency(fine) == pytest.approx(estimate_frequency(coarse), rel=0.01)
