####
## We recommend to not edit this file.
## Put overrides into a separate directory and point BATHSYNC_CONFIG_DIR at it.
## See `test-configuration/` for an example.
####

from os import environ
from typing import Any, Callable

###
# Helper functions
###

# If the `map_fn` isn't defined, then the value that is read from the environment (or the default value if not found) is returned.
# If the `map_fn` is defined, then `map_fn` is invoked and the value (that was read from the environment or the default value if not found)
# is passed to it as a parameter. The value returned from `map_fn` is then the return value of this function.
# The `map_fn` is not invoked, if the value (that was read from the environment or the default value if not found) is None.
def _environ_get_and_map(variable_name: str, default: str | None = None, map_fn: Callable[[str], Any | None] = None) -> Any | None:
    env_value = environ.get(variable_name, default)

    if env_value is None:
        return env_value

    if not map_fn:
        return env_value

    return map_fn(env_value)

_AS_BOOL = lambda value : value.lower() == 'true'
_AS_INT = lambda value : int(value)
_AS_FLOAT = lambda value : float(value)
_AS_LIST = lambda value : list(filter(None, value.split(' ')))
_AS_FLOAT_LIST = lambda value : [float(v) for v in _AS_LIST(value)]
_AS_OPTIONAL_FLOAT = lambda value : float(value) if value.strip() else None

#########################
#                       #
#   Physical defaults   #
#                       #
#########################

# Bath temperature in units of the single-well ground-state energy.
TEMPERATURE = _environ_get_and_map('BATHSYNC_TEMPERATURE', '5', _AS_FLOAT)

# Half-width of the central barrier. The well width defaults to 7a and the outer walls sit at +-8a.
WELL_A = _environ_get_and_map('BATHSYNC_WELL_A', '1', _AS_FLOAT)

# Number of bound states (both parities) the default double well must hold below the barrier top.
WELL_BOUND_STATES = _environ_get_and_map('BATHSYNC_WELL_BOUND_STATES', '20', _AS_INT)

# Barrier height U0. Leave empty to tune it automatically to the middle of the window
# that binds exactly WELL_BOUND_STATES states.
WELL_BARRIER_HEIGHT = _environ_get_and_map('BATHSYNC_WELL_BARRIER_HEIGHT', '', _AS_OPTIONAL_FLOAT)

# Coupling q/v at ladder value 0. Leave empty to calibrate it so that the ground level's
# total out-rate equals the thermal average oscillation frequency.
# Set to 1 for the literal convention q/v = 10**ladder.
COUPLING_REFERENCE = _environ_get_and_map('BATHSYNC_COUPLING_REFERENCE', '', _AS_OPTIONAL_FLOAT)

#########################
#                       #
#   Scenario defaults   #
#                       #
#########################

# Output samples per run.
SAMPLES = _environ_get_and_map('BATHSYNC_SAMPLES', '1024', _AS_INT)

# Run lengths, in average periods of the b=0 system.
RUN_PERIODS = _environ_get_and_map('BATHSYNC_RUN_PERIODS', '10', _AS_FLOAT)
ZENO_PERIODS = _environ_get_and_map('BATHSYNC_ZENO_PERIODS', '5', _AS_FLOAT)

# Log10 coupling ladders.
FIG1_LADDER = _environ_get_and_map('BATHSYNC_FIG1_LADDER', '-3 -1 1 3', _AS_FLOAT_LIST)
SWEEP_LADDER = _environ_get_and_map('BATHSYNC_SWEEP_LADDER', '-3 -2 -1 0 1 2 3', _AS_FLOAT_LIST)

# Zeno preset: bath asymmetry values and the strong-coupling point they are run at.
ZENO_B_VALUES = _environ_get_and_map('BATHSYNC_ZENO_B_VALUES', '0 0.001 0.005 0.5', _AS_FLOAT_LIST)
ZENO_COUPLING_LOG10 = _environ_get_and_map('BATHSYNC_ZENO_COUPLING_LOG10', '1.25', _AS_FLOAT)

# Bias sweep: eps0 = BIAS_EPS_FACTOR * g(E_BIAS_EPS_LEVEL),
# clipped below a tenth of the smallest pair gap.
BIAS_EPS_FACTOR = _environ_get_and_map('BATHSYNC_BIAS_EPS_FACTOR', '10', _AS_FLOAT)
BIAS_EPS_LEVEL = _environ_get_and_map('BATHSYNC_BIAS_EPS_LEVEL', '5', _AS_INT)
BIAS_RAMP_PERIODS = _environ_get_and_map('BATHSYNC_BIAS_RAMP_PERIODS', '150', _AS_FLOAT)
BIAS_SETTLE_FRACTION = _environ_get_and_map('BATHSYNC_BIAS_SETTLE_FRACTION', '0.2', _AS_FLOAT)

# Pins the bias sweep's "moderate" coupling
# instead of taking the entropy-rate argmax of a pre-sweep.
BIAS_MODERATE_LOG10 = _environ_get_and_map('BATHSYNC_BIAS_MODERATE_LOG10', '', _AS_OPTIONAL_FLOAT)

# Thermalization horizon in units of the inverse relaxation gap.
THERMALIZE_GAP_MULTIPLE = _environ_get_and_map('BATHSYNC_THERMALIZE_GAP_MULTIPLE', '50', _AS_FLOAT)

#########################
#                       #
#   Numerical settings  #
#                       #
#########################

# Relative tolerance of the adaptive Runge-Kutta integrator.
RK_REL_TOL = _environ_get_and_map('BATHSYNC_RK_REL_TOL', '1e-8', _AS_FLOAT)

# Time-dependent runs whose step cap would need more steps than this use piecewise expm instead.
RK_STEP_BUDGET = _environ_get_and_map('BATHSYNC_RK_STEP_BUDGET', '200000', _AS_FLOAT)

# Matrix-exponential segments per output sample for time-dependent runs.
PIECEWISE_SUBSTEPS = _environ_get_and_map('BATHSYNC_PIECEWISE_SUBSTEPS', '4', _AS_INT)

# Parallel sweep workers. 1 runs the sweep in-process.
WORKERS = _environ_get_and_map('BATHSYNC_WORKERS', '1', _AS_INT)

# Numeric format of every emitted CSV.
CSV_FLOAT_FORMAT = environ.get('BATHSYNC_CSV_FLOAT_FORMAT', '%.17g')
