"""Domain types of the system + bath model.

A model couples a ladder of energy levels E_i (the vertical space) to a d-dimensional
flavor space (the horizontal space). Every level carries a flavor Hamiltonian
lambda(E_i); the bath enters only through the rate matrix Gamma(E_i, E_j), the bath
temperature T and the flavor operator zeta that multiplies the system-bath coupling.

Energies are measured in units of the ground-state energy of a single infinite well,
times in its inverse, hbar = 1. Gamma[i, j] is the rate for the transition E_i -> E_j.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import softmax

from bathsync.exceptions import ConfigError, ModelValidationError, ProjectorError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
BALANCE_RTOL = 1e-10
PROJECTOR_TOL = 1e-10
TRACE_TOL = 1e-10
MODEL_KEYS = ("levels", "lambdas", "zeta", "gamma", "temperature")
EIGENVALUE_FLOOR = -1e-9

BIAS_SHAPES = ("constant", "linear-ramp")

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (SIGMA_1, SIGMA_3):
    _m.setflags(write=False)


def _frozen(array, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


def hermiticity_error(matrices: np.ndarray) -> float:
    """Max-norm of A - A^dagger over the trailing two axes."""
    matrices = np.asarray(matrices)
    if matrices.size == 0:
        return 0.0
    return float(np.max(np.abs(matrices - np.conj(np.swapaxes(matrices, -1, -2)))))


@dataclass(frozen=True)
class FlavorMatrix:
    """A d x d complex matrix in the flavor space."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 2:
            raise ValueError(f"flavor matrix must be square with d >= 2, got shape {entries.shape}")
        error = hermiticity_error(entries)
        if error > HERMITIAN_TOL:
            raise ValueError(f"flavor matrix must be Hermitian, |A - A^dagger| = {error:.3g}")
        object.__setattr__(self, "entries", _frozen(entries, complex))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def hermiticity_error(self) -> float:
        return hermiticity_error(self.entries)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_error() <= tol

    @classmethod
    def flavor_projector(cls, index: int = 0, dim: int = 2) -> FlavorMatrix:
        """|index><index|; index 0 is the left well for the double-well model."""
        entries = np.zeros((dim, dim), dtype=complex)
        entries[index, index] = 1.0
        return cls(entries)


@dataclass(frozen=True)
class CouplingOperator:
    """Flavor dependence zeta of the system-bath coupling.

    ``b`` is set for the built-in two-flavor form zeta = I + b*sigma_3 and ``None`` for an
    arbitrary Hermitian zeta.
    """

    zeta: np.ndarray
    b: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "zeta", _frozen(self.zeta, complex))
        if self.b is not None:
            object.__setattr__(self, "b", float(self.b))

    @classmethod
    def from_b(cls, b: float) -> CouplingOperator:
        zeta = np.diag([1.0 + b, 1.0 - b]).astype(complex)
        return cls(zeta=zeta, b=b)

    @classmethod
    def identity(cls, dim: int = 2) -> CouplingOperator:
        if dim == 2:
            return cls.from_b(0.0)
        return cls(zeta=np.eye(dim, dtype=complex))

    @property
    def dim(self) -> int:
        return self.zeta.shape[0]


@dataclass(frozen=True)
class BiasSchedule:
    """Well asymmetry epsilon(t), entering the flavor Hamiltonian as epsilon(t)*sigma_3."""

    epsilon_start: float
    epsilon_end: float
    t_start: float
    t_end: float
    shape: str = "linear-ramp"

    def __call__(self, t):
        if self.shape == "constant":
            return np.full_like(np.asarray(t, dtype=float), self.epsilon_start)[()]
        ramp = np.interp(t, [self.t_start, self.t_end], [self.epsilon_start, self.epsilon_end])
        return np.asarray(ramp)[()]

    @property
    def time_dependent(self) -> bool:
        return self.shape != "constant" and self.epsilon_start != self.epsilon_end

    @property
    def max_abs(self) -> float:
        return max(abs(self.epsilon_start), abs(self.epsilon_end))

    def to_dict(self) -> dict[str, Any]:
        return {
            "eps_start": self.epsilon_start,
            "eps_end": self.epsilon_end,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "shape": self.shape,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> BiasSchedule:
        try:
            return cls(
                epsilon_start=float(doc["eps_start"]),
                epsilon_end=float(doc["eps_end"]),
                t_start=float(doc["t_start"]),
                t_end=float(doc["t_end"]),
                shape=str(doc.get("shape", "linear-ramp")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed bias schedule {doc!r}: {exc}") from exc


@dataclass(frozen=True)
class ModelSpec:
    """Complete simulation definition.

    ``lambdas`` is the stack of per-level flavor Hamiltonians, shape (M, d, d).
    Construction only coerces types; use :func:`validate_model` or :meth:`require_valid`
    to check the invariants.
    """

    levels: np.ndarray
    lambdas: np.ndarray
    coupling: CouplingOperator
    gamma: np.ndarray
    temperature: float
    bias: BiasSchedule | None = None

    def __post_init__(self):
        lambdas = self.lambdas
        if not isinstance(lambdas, np.ndarray):
            lambdas = [m.entries if isinstance(m, FlavorMatrix) else m for m in lambdas]
        object.__setattr__(self, "levels", _frozen(np.atleast_1d(self.levels), float))
        object.__setattr__(self, "lambdas", _frozen(lambdas, complex))
        object.__setattr__(self, "gamma", _frozen(np.atleast_2d(self.gamma), float))
        object.__setattr__(self, "temperature", float(self.temperature))

    @property
    def n_levels(self) -> int:
        return self.levels.shape[0]

    @property
    def dim(self) -> int:
        return self.lambdas.shape[-1]

    @property
    def zeta(self) -> np.ndarray:
        return self.coupling.zeta

    @property
    def out_rates(self) -> np.ndarray:
        """Total rate out of each level, sum_j Gamma(E_i, E_j)."""
        return self.gamma.sum(axis=1)

    @property
    def time_dependent(self) -> bool:
        return self.bias is not None and self.bias.time_dependent

    def boltzmann_weights(self) -> np.ndarray:
        return softmax(-self.levels / self.temperature)

    def lambdas_at(self, t: float) -> np.ndarray:
        """Flavor Hamiltonians including the bias term at time t."""
        if self.bias is None:
            return self.lambdas
        return self.lambdas + float(self.bias(t)) * SIGMA_3

    def replace(self, **changes) -> ModelSpec:
        fields = {
            "levels": self.levels,
            "lambdas": self.lambdas,
            "coupling": self.coupling,
            "gamma": self.gamma,
            "temperature": self.temperature,
            "bias": self.bias,
        }
        fields.update(changes)
        return ModelSpec(**fields)

    def require_valid(self) -> ModelSpec:
        violations = validate_model(self)
        if violations:
            raise ModelValidationError(violations)
        return self


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple = ()
    magnitude: float = 0.0
    message: str = ""

    def __str__(self):
        where = f" at {self.indices}" if self.indices else ""
        return f"{self.kind}{where}: {self.message} (magnitude {self.magnitude:.6g})"


def _shape_violations(spec: ModelSpec) -> list[Violation]:
    violations = []
    m = spec.levels.shape[0]
    if spec.levels.ndim != 1 or m == 0:
        message = f"levels must be a nonempty vector, got {spec.levels.shape}"
        violations.append(Violation("shape", message=message))
        return violations
    lambdas = spec.lambdas
    if lambdas.ndim != 3 or lambdas.shape[0] != m or lambdas.shape[1] != lambdas.shape[2]:
        message = f"lambdas must have shape ({m}, d, d), got {lambdas.shape}"
        violations.append(Violation("shape", message=message))
        return violations
    d = lambdas.shape[-1]
    if d < 2:
        violations.append(Violation("shape", message=f"flavor dimension must be >= 2, got {d}"))
    if spec.zeta.shape != (d, d):
        message = f"zeta must have shape ({d}, {d}), got {spec.zeta.shape}"
        violations.append(Violation("shape", message=message))
    if spec.gamma.shape != (m, m):
        message = f"gamma must have shape ({m}, {m}), got {spec.gamma.shape}"
        violations.append(Violation("shape", message=message))
    return violations


def _balance_violations(spec: ModelSpec) -> list[Violation]:
    violations = []
    energies, gamma, temperature = spec.levels, spec.gamma, spec.temperature
    lo, hi = np.triu_indices(len(energies), k=1)
    # orient every pair so that `hi` is the higher level
    swap = energies[lo] > energies[hi]
    lo, hi = np.where(swap, hi, lo), np.where(swap, lo, hi)
    down, up = gamma[hi, lo], gamma[lo, hi]
    active = (down > 0) | (up > 0)
    expected_up = down * np.exp(-(energies[hi] - energies[lo]) / temperature)
    scale = np.maximum(np.abs(up), np.abs(expected_up))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, np.abs(up - expected_up) / scale, 0.0)
    for k in np.nonzero(active & (rel > BALANCE_RTOL))[0]:
        i, j = int(lo[k]), int(hi[k])
        ratio = down[k] / up[k] if up[k] > 0 else np.inf
        boltzmann = np.exp((energies[j] - energies[i]) / temperature)
        violations.append(
            Violation(
                "detailed-balance",
                (i, j),
                float(rel[k]),
                f"Gamma(E_{j},E_{i})/Gamma(E_{i},E_{j}) = {ratio:.12g}, "
                f"expected exp[(E_{j}-E_{i})/T] = {boltzmann:.12g}",
            )
        )
    return violations


def validate_model(spec: ModelSpec) -> list[Violation]:
    """Report every invariant violation of ``spec``. An empty list means the model is valid."""
    violations = _shape_violations(spec)
    if violations:
        return violations

    energies = spec.levels
    if not np.all(np.isfinite(energies)):
        violations.append(Violation("levels", message="energies must be finite"))
    steps = np.diff(energies)
    for i in np.nonzero(steps <= 0)[0]:
        kind = "degenerate-levels" if steps[i] == 0 else "level-order"
        message = "energies must be strictly increasing"
        violations.append(Violation(kind, (int(i), int(i) + 1), float(steps[i]), message))

    errors = np.max(np.abs(spec.lambdas - np.conj(np.swapaxes(spec.lambdas, -1, -2))), axis=(1, 2))
    for i in np.nonzero(errors > HERMITIAN_TOL)[0]:
        violations.append(
            Violation(
                "lambda-hermiticity", (int(i),), float(errors[i]), "lambda(E_i) must be Hermitian"
            )
        )

    zeta_error = hermiticity_error(spec.zeta)
    if zeta_error > HERMITIAN_TOL:
        violations.append(Violation("zeta-hermiticity", (), zeta_error, "zeta must be Hermitian"))
    if spec.coupling.b is not None:
        if spec.dim != 2:
            violations.append(
                Violation("zeta-form", (), float(spec.dim), "the b-form of zeta needs d = 2")
            )
        else:
            expected = CouplingOperator.from_b(spec.coupling.b).zeta
            deviation = float(np.max(np.abs(spec.zeta - expected)))
            if deviation != 0.0:
                violations.append(
                    Violation("zeta-form", (), deviation, "zeta must equal I + b*sigma_3 exactly")
                )

    gamma = spec.gamma
    if not np.all(np.isfinite(gamma)):
        violations.append(Violation("gamma", message="rates must be finite"))
    diagonal = np.abs(np.diag(gamma))
    for i in np.nonzero(diagonal != 0)[0]:
        violations.append(
            Violation(
                "gamma-diagonal", (int(i), int(i)), float(diagonal[i]), "Gamma(E,E) must be zero"
            )
        )
    for i, j in zip(*np.nonzero(gamma < 0)):
        violations.append(
            Violation("gamma-negative", (int(i), int(j)), float(gamma[i, j]), "rates must be >= 0")
        )

    if not spec.temperature > 0:
        violations.append(
            Violation("temperature", (), spec.temperature, "temperature must be positive")
        )
    else:
        violations.extend(_balance_violations(spec))

    bias = spec.bias
    if bias is not None:
        if bias.shape not in BIAS_SHAPES:
            message = f"shape must be one of {BIAS_SHAPES}, got {bias.shape!r}"
            violations.append(Violation("bias", (), 0.0, message))
        if bias.t_end < bias.t_start:
            message = "t_end must not precede t_start"
            violations.append(Violation("bias", (), bias.t_start - bias.t_end, message))
        if spec.dim != 2:
            message = "the sigma_3 bias needs d = 2"
            violations.append(Violation("bias", (), float(spec.dim), message))

    return violations


@dataclass(frozen=True)
class DensityState:
    """Per-level sub-normalized flavor density matrices rho(E_i, t), shape (M, d, d)."""

    rhos: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rhos", _frozen(self.rhos, complex))
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_levels(self) -> int:
        return self.rhos.shape[0]

    @property
    def dim(self) -> int:
        return self.rhos.shape[-1]

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.trace(self.rhos, axis1=1, axis2=2))

    @property
    def total_trace(self) -> float:
        return float(self.populations.sum())

    def vector(self) -> np.ndarray:
        """Row-major vectorization, block i holds vec(rho(E_i))."""
        return self.rhos.reshape(-1).copy()

    @classmethod
    def from_vector(cls, x: np.ndarray, n_levels: int, dim: int, time: float = 0.0) -> DensityState:
        return cls(np.asarray(x).reshape(n_levels, dim, dim), time)

    def violations(self) -> list[Violation]:
        found = []
        error = hermiticity_error(self.rhos)
        if error > HERMITIAN_TOL:
            found.append(Violation("state-hermiticity", (), error, "rho(E_i) must be Hermitian"))
        hermitian = 0.5 * (self.rhos + np.conj(np.swapaxes(self.rhos, -1, -2)))
        lowest = float(np.min(np.linalg.eigvalsh(hermitian)))
        if lowest < EIGENVALUE_FLOOR:
            found.append(Violation("state-positivity", (), lowest, "eigenvalues must be >= -1e-9"))
        drift = abs(self.total_trace - 1.0)
        if drift > TRACE_TOL:
            found.append(Violation("state-trace", (), drift, "total trace must be 1"))
        return found


def thermal_initial_state(
    spec: ModelSpec, flavor_projector: FlavorMatrix | np.ndarray
) -> DensityState:
    """Boltzmann-weighted levels, every level in the same pure flavor state."""
    if isinstance(flavor_projector, FlavorMatrix):
        projector = flavor_projector.entries
    else:
        projector = np.asarray(flavor_projector, dtype=complex)
    if projector.shape != (spec.dim, spec.dim):
        raise ProjectorError(
            f"projector shape {projector.shape} does not match flavor dimension {spec.dim}"
        )
    idempotency = float(np.max(np.abs(projector @ projector - projector)))
    trace_error = abs(np.trace(projector) - 1.0)
    asymmetry = hermiticity_error(projector)
    if idempotency > PROJECTOR_TOL or trace_error > PROJECTOR_TOL or asymmetry > PROJECTOR_TOL:
        raise ProjectorError(
            "flavor projector is not a rank-1 projector "
            f"(|P^2-P| = {idempotency:.3g}, |Tr P - 1| = {trace_error:.3g}, "
            f"|P - P^dagger| = {asymmetry:.3g})"
        )
    weights = spec.boltzmann_weights()
    return DensityState(weights[:, None, None] * projector[None, :, :], time=0.0)


###
# JSON ingestion
###


def _matrix_to_pairs(matrix: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def _pairs_to_matrix(pairs) -> np.ndarray:
    try:
        array = np.asarray(pairs, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected a d x d array of [re, im] pairs: {exc}") from exc
    if array.ndim != 3 or array.shape[-1] != 2:
        raise ConfigError(f"expected a d x d array of [re, im] pairs, got shape {array.shape}")
    return array[..., 0] + 1j * array[..., 1]


def model_to_dict(spec: ModelSpec) -> dict[str, Any]:
    doc = {
        "levels": [float(e) for e in spec.levels],
        "lambdas": [_matrix_to_pairs(m) for m in spec.lambdas],
        "zeta": (
            {"b": spec.coupling.b} if spec.coupling.b is not None else _matrix_to_pairs(spec.zeta)
        ),
        "gamma": spec.gamma.tolist(),
        "temperature": spec.temperature,
    }
    if spec.bias is not None:
        doc["bias"] = spec.bias.to_dict()
    return doc


def model_from_dict(doc: dict[str, Any]) -> ModelSpec:
    missing = [key for key in MODEL_KEYS if key not in doc]
    if missing:
        raise ConfigError(f"model document is missing keys: {', '.join(missing)}")
    if not isinstance(doc["lambdas"], list):
        raise ConfigError("lambdas must be a list of d x d matrices")
    lambdas = [_pairs_to_matrix(m) for m in doc["lambdas"]]
    zeta = doc["zeta"]
    if isinstance(zeta, dict):
        if "b" not in zeta:
            raise ConfigError("zeta object must have the form {\"b\": number}")
        try:
            coupling = CouplingOperator.from_b(float(zeta["b"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"zeta b must be a number: {exc}") from exc
    else:
        coupling = CouplingOperator(zeta=_pairs_to_matrix(zeta))
    bias = BiasSchedule.from_dict(doc["bias"]) if doc.get("bias") else None
    try:
        return ModelSpec(
            levels=np.asarray(doc["levels"], dtype=float),
            lambdas=np.asarray(lambdas),
            coupling=coupling,
            gamma=np.asarray(doc["gamma"], dtype=float),
            temperature=float(doc["temperature"]),
            bias=bias,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model document: {exc}") from exc


def model_to_json(spec: ModelSpec) -> str:
    return json.dumps(model_to_dict(spec), indent=2)


def model_from_json(text: str) -> ModelSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("model document must be a JSON object")
    return model_from_dict(doc)


def load_model(path: str | Path) -> ModelSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read model '{path}': {exc}") from exc
    spec = model_from_json(text)
    logger.debug(f"📄 loaded model '{path}' with {spec.n_levels} levels, d = {spec.dim}")
    return spec


def write_model(spec: ModelSpec, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(model_to_json(spec), encoding="utf-8")
    return path
