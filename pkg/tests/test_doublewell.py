import numpy as np
import pytest
from scipy.integrate import quad

from bathsync.core import validate_model
from bathsync.doublewell import (
    WellGeometry,
    build_model,
    count_bound_states,
    default_geometry,
    grid_spectrum,
    infinite_well_dipoles,
    solve_bound_states,
    tune_barrier_height,
)
from bathsync.exceptions import SpectrumError


def test_default_well_binds_twenty_states(spectrum):
    geom = spectrum.geometry

    assert len(spectrum.pairs) == 10
    assert geom.well_width == 7.0
    assert geom.outer_wall == 8.0
    assert count_bound_states(geom.barrier_height) == 20
    assert geom.barrier_height == tune_barrier_height()


def test_unit_of_energy_is_single_well_ground_state():
    geom = default_geometry()
    assert np.pi**2 / (2 * geom.mass * geom.well_width**2) == pytest.approx(1.0)


def test_splittings_positive_and_increasing(spectrum):
    g = spectrum.splittings

    assert np.all(g > 0)
    assert np.all(np.diff(g) > 0)
    assert g[9] / g[0] > 10


def test_low_lying_splittings_are_small(spectrum):
    g, energies = spectrum.splittings, spectrum.energies
    spacing = np.diff(energies)

    assert np.all(g[:5] < 0.01 * spacing[:5])


def test_levels_strictly_increasing(spectrum):
    assert np.all(np.diff(spectrum.energies) > 0)
    assert spectrum.energies[-1] < spectrum.geometry.barrier_height


def test_agrees_with_grid_hamiltonian(spectrum):
    analytic = np.sort([e for pair in spectrum.pairs for e in (pair.E_even, pair.E_odd)])
    numeric = grid_spectrum(spectrum.geometry)

    np.testing.assert_allclose(numeric, analytic, rtol=1e-4)


def test_impenetrable_barrier_limit():
    geom = WellGeometry(barrier_height=1e6, bound_states=None)
    (pair,) = solve_bound_states(geom, max_pairs=1)
    kappa = np.sqrt(2 * geom.mass * (geom.barrier_height - pair.E_mean))

    assert abs(pair.g) < 1e-10
    assert 0 < 1 - pair.E_mean < 2.5 / (kappa * geom.well_width)


def test_wider_barrier_shrinks_splittings(spectrum):
    wider = WellGeometry(
        a=1.2,
        well_width=7.0,
        barrier_height=spectrum.geometry.barrier_height,
        bound_states=None,
    )
    pairs = solve_bound_states(wider, max_pairs=8)

    assert np.all(np.array([pair.g for pair in pairs]) < spectrum.splittings[:8])


def test_mistuned_barrier_is_an_error():
    with pytest.raises(SpectrumError):
        solve_bound_states(WellGeometry(barrier_height=50.0))


def test_dipoles_closed_form(spectrum):
    x = spectrum.dipoles

    assert x[0, 1] == pytest.approx(-112 / (9 * np.pi**2), rel=1e-14)
    assert x[0, 2] == 0.0
    np.testing.assert_array_equal(x, x.T)
    np.testing.assert_array_equal(np.diag(x), 0.0)


def test_dipoles_match_quadrature():
    geom = default_geometry()
    width = geom.well_width
    x = infinite_well_dipoles(geom, 10)

    def mode(n, s):
        return np.sqrt(2 / width) * np.sin(n * np.pi * s / width)

    for j in range(1, 11):
        for k in range(1, 11):
            if j == k:
                continue
            value, _ = quad(
                lambda s: s * mode(j, s) * mode(k, s), 0, width, epsabs=1e-13, limit=200
            )
            assert x[j - 1, k - 1] == pytest.approx(value, abs=1e-10)


def test_build_model_is_valid():
    spec = build_model(1e-2, 5.0, b=0.2)

    assert validate_model(spec) == []
    assert spec.n_levels == 10
    assert spec.coupling.b == 0.2
    # same-parity levels have no dipole
    assert spec.gamma[0, 2] == 0.0
    assert spec.gamma[0, 1] > 0.0


def test_zero_coupling_has_no_rates():
    spec = build_model(0.0, 5.0)
    np.testing.assert_array_equal(spec.gamma, 0.0)


def test_negative_coupling_rejected():
    with pytest.raises(ValueError):
        build_model(-1.0, 5.0)
