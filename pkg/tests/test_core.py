import numpy as np
import pytest

from bathsync.core import (
    SIGMA_1,
    BiasSchedule,
    CouplingOperator,
    DensityState,
    FlavorMatrix,
    ModelSpec,
    load_model,
    model_from_json,
    thermal_initial_state,
    validate_model,
    write_model,
)
from bathsync.exceptions import ConfigError, ModelValidationError, ProjectorError

from conftest import random_spec, two_level_spec


def _spec(gamma, levels=(0.0, 1.0), temperature=1.0, lambdas=None, coupling=None):
    m = len(levels)
    return ModelSpec(
        levels=np.asarray(levels, dtype=float),
        lambdas=np.zeros((m, 2, 2)) if lambdas is None else lambdas,
        coupling=coupling or CouplingOperator.from_b(0.0),
        gamma=np.asarray(gamma, dtype=float),
        temperature=temperature,
    )


def test_balanced_rates_validate_clean():
    down = 2.0
    up = down * np.exp(-1.0)
    assert validate_model(_spec([[0.0, up], [down, 0.0]])) == []


def test_unbalanced_rates_report_one_violation():
    violations = validate_model(_spec([[0.0, 1.0], [1.0, 0.0]]))

    assert len(violations) == 1
    violation = violations[0]
    assert violation.kind == "detailed-balance"
    assert violation.indices == (0, 1)
    assert "2.71828" in violation.message


def test_validation_is_idempotent(rng):
    spec = _spec([[0.0, 1.0], [1.0, 0.0]], lambdas=np.array([SIGMA_1, 1j * SIGMA_1]))
    assert validate_model(spec) == validate_model(spec)
    assert len(validate_model(spec)) == 2


def test_random_specs_are_valid(rng):
    for _ in range(50):
        assert validate_model(random_spec(rng)) == []


def test_invariant_violations_are_reported():
    spec = _spec(
        [[0.5, -1.0], [0.0, 0.0]],
        levels=(1.0, 1.0),
        coupling=CouplingOperator(zeta=np.diag([1.2, 0.9]), b=0.1),
    )
    kinds = {v.kind for v in validate_model(spec)}

    assert {"degenerate-levels", "gamma-diagonal", "gamma-negative", "zeta-form"} <= kinds


def test_shape_mismatch_is_reported():
    spec = _spec(np.zeros((3, 3)))
    violations = validate_model(spec)
    assert [v.kind for v in violations] == ["shape"]


def test_require_valid_raises_with_report():
    spec = _spec([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ModelValidationError) as excinfo:
        spec.require_valid()
    assert len(excinfo.value.violations) == 1
    assert "detailed-balance" in str(excinfo.value)


def test_zero_b_is_exact_identity():
    assert np.array_equal(CouplingOperator.from_b(0.0).zeta, np.eye(2))
    zeta = CouplingOperator.from_b(0.25).zeta
    assert np.array_equal(zeta, np.diag([1.25, 0.75]))


def test_spec_arrays_are_read_only(rng):
    spec = random_spec(rng)
    with pytest.raises(ValueError):
        spec.levels[0] = 0.0
    with pytest.raises(ValueError):
        spec.gamma[0, 0] = 1.0


def test_bias_schedule_linear_ramp():
    ramp = BiasSchedule(1.0, -1.0, 2.0, 4.0)

    assert ramp(0.0) == 1.0
    assert ramp(3.0) == pytest.approx(0.0)
    assert ramp(10.0) == -1.0
    assert ramp.max_abs == 1.0
    assert ramp.time_dependent


def test_constant_bias_schedule():
    constant = BiasSchedule(0.3, 0.3, 0.0, 1.0, "constant")
    assert constant(5.0) == 0.3
    assert not constant.time_dependent


def test_thermal_state_single_level():
    spec = two_level_spec(g=(0.5,), levels=(1.0,))
    state = thermal_initial_state(spec, FlavorMatrix.flavor_projector(0))

    np.testing.assert_array_equal(state.rhos[0], np.diag([1.0, 0.0]))
    assert state.total_trace == 1.0


def test_thermal_state_boltzmann_weights():
    spec = two_level_spec(levels=(1.0, 2.0), temperature=1.0)
    state = thermal_initial_state(spec, FlavorMatrix.flavor_projector(0))

    assert state.populations[0] == pytest.approx(0.731059, abs=1e-6)
    assert state.populations[1] == pytest.approx(0.268941, abs=1e-6)
    assert state.violations() == []


def test_thermal_state_on_double_well(spectrum):
    from bathsync.doublewell import build_model

    spec = build_model(0.0, 5.0)
    state = thermal_initial_state(spec, FlavorMatrix.flavor_projector(0))
    weights = np.exp(-spectrum.energies / 5.0)

    np.testing.assert_allclose(state.populations, weights / weights.sum(), rtol=1e-12)
    assert state.violations() == []


@pytest.mark.parametrize(
    "projector",
    [0.5 * np.eye(2), np.eye(2), np.array([[1.0, 1.0], [0.0, 0.0]])],
)
def test_thermal_state_rejects_non_projectors(projector):
    spec = two_level_spec()
    with pytest.raises(ProjectorError):
        thermal_initial_state(spec, projector)
    with pytest.raises(ValueError):
        thermal_initial_state(spec, projector)


def test_flavor_matrix_must_be_hermitian():
    assert FlavorMatrix(np.array([[1.0, 0.5j], [-0.5j, 0.0]])).is_hermitian()
    with pytest.raises(ValueError, match="Hermitian"):
        FlavorMatrix(np.array([[1.0, 1.0], [0.0, 0.0]]))


def test_density_state_reports_bad_trace():
    state = DensityState(np.array([np.eye(2)]))
    assert [v.kind for v in state.violations()] == ["state-trace"]


def test_model_json_file(tmp_path, rng):
    spec = random_spec(rng, n_levels=3).replace(bias=BiasSchedule(0.1, -0.1, 0.0, 5.0))
    path = write_model(spec, tmp_path / "model.json")
    loaded = load_model(path)

    np.testing.assert_array_equal(loaded.levels, spec.levels)
    np.testing.assert_array_equal(loaded.lambdas, spec.lambdas)
    np.testing.assert_array_equal(loaded.gamma, spec.gamma)
    assert loaded.coupling.b == spec.coupling.b
    assert loaded.bias == spec.bias
    assert validate_model(loaded) == []


def test_model_json_explicit_zeta():
    text = """{
        "levels": [1.0],
        "lambdas": [[[[0, 0], [0.5, 0]], [[0.5, 0], [0, 0]]]],
        "zeta": [[[1, 0], [0, 0.5]], [[0, -0.5], [1, 0]]],
        "gamma": [[0]],
        "temperature": 2
    }"""
    spec = model_from_json(text)

    assert spec.coupling.b is None
    np.testing.assert_array_equal(spec.zeta, np.array([[1, 0.5j], [-0.5j, 1]]))
    assert validate_model(spec) == []


RAGGED = (
    '{"levels": [1], "lambdas": [[[[0, 0], [1, 0]], [[1, 0]]]], '
    '"zeta": {"b": 0}, "gamma": [[0]], "temperature": 1}'
)
BAD_B = '{"levels": [1], "lambdas": [], "zeta": {"b": "left"}, "gamma": [[0]], "temperature": 1}'


@pytest.mark.parametrize("text", ["not json", "[]", '{"levels": [1]}', RAGGED, BAD_B])
def test_malformed_model_json(text):
    with pytest.raises(ConfigError):
        model_from_json(text)


def test_missing_model_file(tmp_path):
    with pytest.raises(ConfigError):
        load_model(tmp_path / "missing.json")
