"""Time evolution of the per-level flavor density matrices.

    d rho_i / dt = -i [lambda_i + eps(t) sigma_3, rho_i]
                   + sum_j Gamma[j, i] zeta rho_j zeta
                   - 1/2 {zeta^2, rho_i} sum_j Gamma[i, j]

The state vector is the row-major flattening of the (M, d, d) stack, so block i holds
vec(rho_i) and vec(A X B) = (A kron B^T) vec(X).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from scipy.linalg import block_diag, expm

from bathsync import configuration as settings
from bathsync import observables as obs
from bathsync.core import SIGMA_3, BiasSchedule, DensityState, ModelSpec
from bathsync.exceptions import IntegrationError, InvariantViolation, TimeDependentGeneratorError

logger = logging.getLogger(__name__)

TRACE_GATE = 1e-9
HERMITICITY_GATE = 1e-9
POSITIVITY_GATE = -1e-8
MIN_STEP = 1e-14
STEP_CAP_FACTOR = 0.1

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _check_shapes(rhos: np.ndarray, spec: ModelSpec):
    expected = (spec.n_levels, spec.dim, spec.dim)
    if rhos.shape != expected:
        raise ValueError(f"state has shape {rhos.shape}, model expects {expected}")


def rhs(state: DensityState | np.ndarray, spec: ModelSpec, t: float) -> np.ndarray:
    """Time derivative of every rho(E_i) at time t, shape (M, d, d)."""
    rhos = state.rhos if isinstance(state, DensityState) else np.asarray(state, dtype=complex)
    _check_shapes(rhos, spec)
    lambdas = spec.lambdas_at(t)
    zeta = spec.zeta
    zeta2 = zeta @ zeta
    coherent = -1j * (lambdas @ rhos - rhos @ lambdas)
    gain = np.einsum("ji,jab->iab", spec.gamma, zeta @ rhos @ zeta)
    loss = 0.5 * spec.out_rates[:, None, None] * (zeta2 @ rhos + rhos @ zeta2)
    return coherent + gain - loss


def _commutator(h: np.ndarray) -> np.ndarray:
    """Superoperator of -i[h, .] on row-major vec."""
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def trace_functional(n_levels: int, dim: int) -> np.ndarray:
    """w with w . x = sum_i Tr rho_i."""
    return np.tile(np.eye(dim).reshape(-1), n_levels)


def make_trace_preserving(propagator: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Rank-one correction so that w is exactly a left fixed vector of the propagator."""
    u = w / (w @ w)
    return propagator - np.outer(u, w @ propagator - w)


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Matrix of the equation of motion: G(t) = static + eps(t) * bias_part."""

    static: np.ndarray
    bias_part: np.ndarray | None
    bias: BiasSchedule | None
    n_levels: int
    dim: int
    time: float = 0.0

    @property
    def time_dependent(self) -> bool:
        return self.bias is not None and self.bias.time_dependent

    def at(self, t: float) -> np.ndarray:
        if self.bias is None:
            return self.static
        return self.static + float(self.bias(t)) * self.bias_part

    @cached_property
    def generator(self) -> np.ndarray:
        return self.at(self.time)

    @cached_property
    def trace_functional(self) -> np.ndarray:
        return trace_functional(self.n_levels, self.dim)

    def propagator(self, dt: float, t: float | None = None) -> np.ndarray:
        generator = self.generator if t is None else self.at(t)
        return make_trace_preserving(expm(generator * dt), self.trace_functional)


def build_liouvillian(spec: ModelSpec, t: float = 0.0) -> Liouvillian:
    m, d = spec.n_levels, spec.dim
    zeta = spec.zeta
    zeta2 = zeta @ zeta
    eye = np.eye(d)

    coherent = block_diag(*[_commutator(h) for h in spec.lambdas])
    gain = np.kron(spec.gamma.T, np.kron(zeta, zeta.T))
    anticommutator = 0.5 * (np.kron(zeta2, eye) + np.kron(eye, zeta2.T))
    loss = np.kron(np.diag(spec.out_rates), anticommutator)

    bias_part = None
    if spec.bias is not None:
        bias_part = np.kron(np.eye(m), _commutator(SIGMA_3))
    return Liouvillian(coherent + gain - loss, bias_part, spec.bias, m, d, float(t))


def _hermitize(x: np.ndarray, m: int, d: int) -> np.ndarray:
    return obs.hermitized(x.reshape(m, d, d)).reshape(-1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled evolution: ``states`` has shape (K, M, d, d) matching ``times``."""

    times: np.ndarray
    states: np.ndarray
    method: str = ""

    @property
    def n_levels(self) -> int:
        return self.states.shape[1]

    def state(self, k: int) -> DensityState:
        return DensityState(self.states[k], self.times[k])

    @property
    def final(self) -> DensityState:
        return self.state(-1)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return obs.level_eigenvalues(self.states)

    @cached_property
    def p_left(self) -> np.ndarray:
        return obs.p_left(self.states)

    @cached_property
    def populations(self) -> np.ndarray:
        return obs.populations(self.states)

    @cached_property
    def entropy(self) -> np.ndarray:
        return obs.entropy(self.states, self.eigenvalues)

    @property
    def trace_drift(self) -> float:
        return float(np.max(np.abs(self.populations.sum(axis=1) - 1.0)))

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.states - np.conj(np.swapaxes(self.states, -1, -2)))))

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues.min())

    def check_invariants(self) -> Trajectory:
        problems = []
        if self.trace_drift > TRACE_GATE:
            problems.append(f"trace drift {self.trace_drift:.3g} > {TRACE_GATE}")
        if self.hermiticity_error > HERMITICITY_GATE:
            problems.append(f"Hermiticity error {self.hermiticity_error:.3g} > {HERMITICITY_GATE}")
        if self.min_eigenvalue < POSITIVITY_GATE:
            problems.append(f"minimum eigenvalue {self.min_eigenvalue:.3g} < {POSITIVITY_GATE}")
        if problems:
            name = self.method or "trajectory"
            raise InvariantViolation(f"{name} broke invariants: " + "; ".join(problems))
        return self

    def to_frame(self, full: bool = False) -> pd.DataFrame:
        columns = {"t": self.times, "p_left": self.p_left, "entropy": self.entropy}
        for i in range(self.n_levels):
            columns[f"pop_{i + 1}"] = self.populations[:, i]
        if full:
            d = self.states.shape[-1]
            for i in range(self.n_levels):
                for a in range(d):
                    for b in range(d):
                        columns[f"rho_{i + 1}_{a}{b}_re"] = np.real(self.states[:, i, a, b])
                        columns[f"rho_{i + 1}_{a}{b}_im"] = np.imag(self.states[:, i, a, b])
        return pd.DataFrame(columns)


def _time_grid(initial: DensityState, t_grid) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.shape[0] == 0:
        raise ValueError("time grid must be a nonempty vector")
    if t_grid[0] < initial.time or np.any(np.diff(t_grid) < 0):
        raise ValueError("time grid must be nondecreasing and start at or after the initial time")
    return t_grid


def propagate_expm(spec: ModelSpec, initial: DensityState, t_grid) -> Trajectory:
    """Exact propagation exp(G (t_k - t_0)) for a time-independent generator."""
    if spec.time_dependent:
        raise TimeDependentGeneratorError(
            "the bias schedule makes the generator time-dependent; "
            "use integrate_adaptive or propagate_piecewise"
        )
    _check_shapes(initial.rhos, spec)
    t_grid = _time_grid(initial, t_grid)
    liouvillian = build_liouvillian(spec, initial.time)
    m, d = spec.n_levels, spec.dim

    states = np.empty((t_grid.shape[0], m * d * d), dtype=complex)
    x = initial.vector()
    cached_dt, cached = None, None
    previous = initial.time
    for k, t in enumerate(t_grid):
        dt = t - previous
        if dt > 0:
            if cached_dt is None or abs(dt - cached_dt) > 1e-9 * dt:
                cached_dt, cached = dt, liouvillian.propagator(dt)
            x = _hermitize(cached @ x, m, d)
        states[k] = x
        previous = t
    return Trajectory(t_grid, states.reshape(-1, m, d, d), "expm")


def step_cap(spec: ModelSpec) -> float:
    """0.1 over the fastest scale among total out-rates, |eig lambda| and |eps|."""
    scales = [
        spec.out_rates.max(initial=0.0),
        np.abs(np.linalg.eigvalsh(spec.lambdas)).max(initial=0.0),
        spec.bias.max_abs if spec.bias is not None else 0.0,
    ]
    fastest = max(scales)
    return STEP_CAP_FACTOR / fastest if fastest > 0 else np.inf


def _dopri_step(f, t, y, h, k1):
    stages = np.empty((7, y.shape[0]), dtype=complex)
    stages[0] = k1
    for s in range(1, 6):
        stages[s] = f(t + _C[s] * h, y + h * (_A[s] @ stages[:s]))
    y_new = y + h * (_B5[:6] @ stages[:6])
    stages[6] = f(t + h, y_new)
    return y_new, h * (_E @ stages), stages[6]


def integrate_adaptive(
    spec: ModelSpec,
    initial: DensityState,
    t_end: float,
    rel_tol: float | None = None,
    samples: int | None = None,
    t_grid=None,
    max_steps: int | None = None,
) -> Trajectory:
    """Embedded Dormand-Prince 5(4) integration with error control, landing on every sample time."""
    rel_tol = settings.RK_REL_TOL if rel_tol is None else rel_tol
    if not t_end > initial.time:
        raise ValueError(f"t_end = {t_end} must exceed the initial time {initial.time}")
    if t_grid is None:
        t_grid = np.linspace(initial.time, t_end, samples or settings.SAMPLES)
    t_grid = _time_grid(initial, t_grid)
    max_steps = int(2 * settings.RK_STEP_BUDGET) if max_steps is None else max_steps
    _check_shapes(initial.rhos, spec)

    liouvillian = build_liouvillian(spec, initial.time)
    m, d = spec.n_levels, spec.dim
    atol = rel_tol * 1e-2
    h_cap = step_cap(spec)

    def f(t, y):
        return liouvillian.at(t) @ y

    states = np.empty((t_grid.shape[0], m * d * d), dtype=complex)
    t = initial.time
    y = initial.vector()
    k1 = f(t, y)
    h = min(h_cap, 1e-2 * (t_grid[-1] - t))
    attempts = rejected = 0
    for k, target in enumerate(t_grid):
        while t < target:
            trimmed = target - t <= h
            step = target - t if trimmed else h
            if attempts >= max_steps:
                raise IntegrationError(
                    f"step budget of {max_steps} exhausted at t = {t:.6g} of {t_grid[-1]:.6g}; "
                    "the model is too stiff for explicit integration, use propagate_piecewise"
                )
            attempts += 1
            y_new, error_estimate, k7 = _dopri_step(f, t, y, step, k1)
            scale = atol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            error = np.sqrt(np.mean(np.abs(error_estimate / scale) ** 2))
            factor = 5.0 if error == 0 else min(5.0, max(0.2, 0.9 * error**-0.2))
            if error <= 1.0:
                t = target if trimmed else t + step
                y = _hermitize(y_new, m, d)
                k1 = k7
                h = min(h_cap, max(h, step * factor) if trimmed else step * factor)
            else:
                rejected += 1
                h = min(h_cap, step * min(factor, 1.0))
            if h < MIN_STEP:
                raise IntegrationError(
                    f"step size underflow ({h:.3g}) at t = {t:.6g}; "
                    "narrow the coupling or use propagate_piecewise"
                )
        states[k] = y
    logger.debug(f"🧮 adaptive integration took {attempts} steps ({rejected} rejected)")
    return Trajectory(t_grid, states.reshape(-1, m, d, d), "rk45")


def propagate_piecewise(
    spec: ModelSpec, initial: DensityState, t_grid, substeps: int | None = None
) -> Trajectory:
    """Matrix exponentials over short segments with the bias frozen at each segment midpoint."""
    substeps = settings.PIECEWISE_SUBSTEPS if substeps is None else substeps
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    _check_shapes(initial.rhos, spec)
    t_grid = _time_grid(initial, t_grid)
    liouvillian = build_liouvillian(spec, initial.time)
    m, d = spec.n_levels, spec.dim

    def epsilon(t):
        return float(spec.bias(t)) if spec.bias is not None else 0.0

    states = np.empty((t_grid.shape[0], m * d * d), dtype=complex)
    x = initial.vector()
    previous = initial.time
    cached_key, cached = None, None
    for k, t in enumerate(t_grid):
        if t > previous:
            edges = np.linspace(previous, t, substeps + 1)
            dt = edges[1] - edges[0]
            for mid in 0.5 * (edges[:-1] + edges[1:]):
                key = (epsilon(mid), dt)
                stale = cached_key is None or key[0] != cached_key[0]
                if stale or abs(dt - cached_key[1]) > 1e-9 * dt:
                    cached_key, cached = key, liouvillian.propagator(dt, mid)
                x = cached @ x
            x = _hermitize(x, m, d)
        states[k] = x
        previous = t
    return Trajectory(t_grid, states.reshape(-1, m, d, d), "piecewise-expm")


def propagate(
    spec: ModelSpec,
    initial: DensityState,
    t_end: float,
    samples: int | None = None,
    method: str | None = None,
) -> Trajectory:
    """Propagate to ``t_end`` on a uniform grid, choosing the propagator.

    expm for time-independent generators (a constant bias is folded into lambda), adaptive
    Runge-Kutta for time-dependent ones within the step budget, piecewise expm otherwise.
    """
    t_grid = np.linspace(initial.time, t_end, samples or settings.SAMPLES)
    if spec.bias is not None and not spec.time_dependent:
        spec = spec.replace(lambdas=spec.lambdas_at(initial.time), bias=None)

    if method is None:
        if not spec.time_dependent:
            method = "expm"
        elif (t_end - initial.time) / step_cap(spec) <= settings.RK_STEP_BUDGET:
            method = "rk45"
        else:
            method = "piecewise-expm"
    logger.debug(f"🧮 propagating {spec.n_levels} levels to t = {t_end:.6g} with {method}")

    if method == "expm":
        return propagate_expm(spec, initial, t_grid)
    if method == "rk45":
        return integrate_adaptive(spec, initial, t_end, t_grid=t_grid)
    if method == "piecewise-expm":
        return propagate_piecewise(spec, initial, t_grid)
    raise ValueError(f"unknown propagation method '{method}'")
