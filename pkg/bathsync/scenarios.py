"""Scenario presets, summaries and parameter sweeps.

Presets:

* ``fig1`` / ``fig2``: thermal-left double well on a coupling ladder; P_left and entropy.
* ``zeno``: strong coupling with a flavor-dependent bath coupling zeta = 1 + b sigma_3.
* ``bias_sweep``: a slow ramp of the well asymmetry through zero at zero, moderate and
  strong coupling.
* ``thermalize``: lambda = 0, zeta = 1 relaxation of the level populations to Boltzmann.
* ``custom``: an explicit model loaded from JSON.

Ladder values L map to the coupling q/v = q_ref * 10**L, see :func:`reference_coupling`.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import pathos

from bathsync import configuration as settings
from bathsync import observables as obs
from bathsync.bath_rates import relaxation_gap
from bathsync.core import (
    BiasSchedule,
    CouplingOperator,
    DensityState,
    FlavorMatrix,
    ModelSpec,
    load_model,
    thermal_initial_state,
)
from bathsync.doublewell import build_model, compute_spectrum, default_geometry
from bathsync.evolution import Trajectory, propagate
from bathsync.exceptions import BathSyncError, ConfigError, NoDominantLineError

logger = logging.getLogger(__name__)

SCENARIOS = ("fig1", "fig2", "zeno", "bias_sweep", "thermalize", "custom")

SUMMARY_COLUMNS = [
    "scenario",
    "label",
    "coupling_log10",
    "q_over_v",
    "b",
    "temperature",
    "t_end",
    "samples",
    "method",
    "frequency",
    "frequency_error",
    "thermal_average_frequency",
    "spectral_line_count",
    "trace_drift_max",
    "min_eigenvalue",
    "entropy_rate",
    "amplitude_decay_per_period",
    "final_p_left",
    "min_p_left",
    "final_p_right",
    "transition_width",
    "max_population_deviation",
]


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario invocation. Unset fields fall back to the preset defaults in settings."""

    scenario: str
    coupling_log10: tuple[float, ...] | None = None
    b: float | None = None
    temperature: float = field(default_factory=lambda: settings.TEMPERATURE)
    t_end: float | None = None
    samples: int = field(default_factory=lambda: settings.SAMPLES)
    model_path: str | None = None
    output_path: str | None = None
    seed: int = 0
    full: bool = False

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            expected = ", ".join(SCENARIOS)
            raise ConfigError(f"unknown scenario '{self.scenario}', expected one of {expected}")
        if self.scenario == "custom" and not self.model_path:
            raise ConfigError("scenario 'custom' requires a model path")
        if self.scenario != "custom" and self.model_path:
            raise ConfigError(
                f"scenario '{self.scenario}' is a preset and does not take a model path"
            )
        if self.coupling_log10 is not None:
            ladder = self.coupling_log10
            if isinstance(ladder, (int, float)):
                ladder = (ladder,)
            object.__setattr__(self, "coupling_log10", tuple(float(v) for v in ladder))
            if not self.coupling_log10:
                raise ConfigError("coupling_log10 must hold at least one value")
        if not self.temperature > 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.samples < 4:
            raise ConfigError(f"need at least 4 samples, got {self.samples}")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ScenarioConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "scenario" not in doc:
            raise ConfigError("config needs a 'scenario'")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc

    @classmethod
    def from_json(cls, path: str | Path) -> ScenarioConfig:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config '{path}': {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config '{path}' must hold a JSON object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict[str, Any]:
        doc = asdict(self)
        if self.coupling_log10 is not None:
            doc["coupling_log10"] = list(self.coupling_log10)
        return doc


@dataclass(frozen=True, eq=False)
class RunPlan:
    label: str
    spec: ModelSpec
    initial: DensityState
    t_end: float
    samples: int
    coupling_log10: float | None = None
    q_over_v: float | None = None
    b: float | None = None
    reference_frequency: float | None = None


@dataclass(frozen=True, eq=False)
class RunResult:
    plan: RunPlan
    trajectory: Trajectory
    summary: dict[str, Any]


@dataclass(eq=False)
class ScenarioResult:
    config: ScenarioConfig
    runs: list[RunResult]
    files: list[Path] = field(default_factory=list)

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([run.summary for run in self.runs], columns=SUMMARY_COLUMNS)


###
# Calibration
###


def average_frequency(temperature: float) -> float:
    """Thermal average oscillation frequency of the default double well."""
    return obs.thermal_average_frequency(build_model(0.0, temperature))


def average_period(temperature: float) -> float:
    return 2.0 * np.pi / average_frequency(temperature)


def reference_coupling(temperature: float) -> float:
    """q/v at ladder value 0.

    ``COUPLING_REFERENCE`` when set; otherwise calibrated so that the ground level's total
    out-rate equals the thermal average frequency. Rates scale with (q/v)^2.
    """
    if settings.COUPLING_REFERENCE is not None:
        return float(settings.COUPLING_REFERENCE)
    unit = build_model(1.0, temperature)
    return math.sqrt(average_frequency(temperature) / unit.out_rates[0])


def coupling_from_log10(value: float | None, temperature: float) -> float:
    if value is None:
        return 0.0
    return reference_coupling(temperature) * 10.0**value


def left_projector() -> FlavorMatrix:
    return FlavorMatrix.flavor_projector(0, 2)


def bias_amplitude() -> float:
    """eps0 = factor * g(E_level), clipped below a tenth of the smallest pair gap."""
    spectrum = compute_spectrum(default_geometry())
    level = min(settings.BIAS_EPS_LEVEL, len(spectrum.pairs)) - 1
    ceiling = 0.1 * np.diff(spectrum.energies).min()
    return min(settings.BIAS_EPS_FACTOR * spectrum.splittings[level], ceiling)


def _ladder(cfg: ScenarioConfig, default) -> tuple[float, ...]:
    return cfg.coupling_log10 if cfg.coupling_log10 is not None else tuple(default)


def _label(value: float) -> str:
    return f"coupling_{value:+g}"


###
# Plans
###


def _ladder_plans(cfg: ScenarioConfig) -> list[RunPlan]:
    b = cfg.b or 0.0
    omega = average_frequency(cfg.temperature)
    t_end = cfg.t_end or settings.RUN_PERIODS * 2.0 * np.pi / omega
    plans = []
    for value in _ladder(cfg, settings.FIG1_LADDER):
        q = coupling_from_log10(value, cfg.temperature)
        spec = build_model(q, cfg.temperature, b)
        initial = thermal_initial_state(spec, left_projector())
        plans.append(RunPlan(_label(value), spec, initial, t_end, cfg.samples, value, q, b, omega))
    return plans


def _zeno_plans(cfg: ScenarioConfig) -> list[RunPlan]:
    ladder = _ladder(cfg, [settings.ZENO_COUPLING_LOG10])
    if len(ladder) != 1:
        raise ConfigError("the zeno scenario runs at a single coupling")
    value = ladder[0]
    q = coupling_from_log10(value, cfg.temperature)
    omega = average_frequency(cfg.temperature)
    t_end = cfg.t_end or settings.ZENO_PERIODS * 2.0 * np.pi / omega
    b_values = [cfg.b] if cfg.b is not None else settings.ZENO_B_VALUES
    plans = []
    for b in b_values:
        spec = build_model(q, cfg.temperature, b)
        initial = thermal_initial_state(spec, left_projector())
        plans.append(RunPlan(f"b_{b:g}", spec, initial, t_end, cfg.samples, value, q, b, omega))
    return plans


def moderate_coupling_log10(temperature: float, samples: int) -> float:
    """Ladder value with the largest late-window entropy production, or BIAS_MODERATE_LOG10."""
    if settings.BIAS_MODERATE_LOG10 is not None:
        return float(settings.BIAS_MODERATE_LOG10)
    pre_sweep = ScenarioConfig(
        "fig2",
        coupling_log10=tuple(settings.SWEEP_LADDER),
        temperature=temperature,
        samples=samples,
    )
    rates = [execute(plan).summary["entropy_rate"] for plan in _ladder_plans(pre_sweep)]
    value = settings.SWEEP_LADDER[int(np.nanargmax(rates))]
    logger.info(f"🌡️ moderate coupling from entropy-rate pre-sweep: log10 = {value:+g}")
    return value


def _bias_sweep_plans(cfg: ScenarioConfig) -> list[RunPlan]:
    b = cfg.b or 0.0
    omega = average_frequency(cfg.temperature)
    ramp_end = settings.BIAS_RAMP_PERIODS * 2.0 * np.pi / omega
    t_end = cfg.t_end or ramp_end * (1.0 + settings.BIAS_SETTLE_FRACTION)
    epsilon = bias_amplitude()
    bias = BiasSchedule(epsilon, -epsilon, 0.0, ramp_end, "linear-ramp")

    if cfg.coupling_log10 is not None:
        couplings = [(_label(value), value) for value in cfg.coupling_log10]
    else:
        couplings = [
            ("zero", None),
            ("moderate", moderate_coupling_log10(cfg.temperature, cfg.samples)),
            ("strong", max(settings.SWEEP_LADDER)),
        ]
    plans = []
    for label, value in couplings:
        q = coupling_from_log10(value, cfg.temperature)
        spec = build_model(q, cfg.temperature, b, bias=bias)
        initial = thermal_initial_state(spec, left_projector())
        plans.append(RunPlan(label, spec, initial, t_end, cfg.samples, value, q, b, omega))
    return plans


def _thermalize_plans(cfg: ScenarioConfig) -> list[RunPlan]:
    plans = []
    for value in _ladder(cfg, [0.0]):
        q = coupling_from_log10(value, cfg.temperature)
        base = build_model(q, cfg.temperature, 0.0)
        spec = base.replace(
            lambdas=np.zeros_like(base.lambdas), coupling=CouplingOperator.identity(2)
        )
        gap = relaxation_gap(spec.gamma)
        if cfg.t_end is None and gap == 0:
            raise ConfigError("thermalize needs a nonzero coupling or an explicit t_end")
        t_end = cfg.t_end or settings.THERMALIZE_GAP_MULTIPLE / gap
        rhos = np.zeros((spec.n_levels, 2, 2), dtype=complex)
        rhos[0] = left_projector().entries
        initial = DensityState(rhos)
        plans.append(RunPlan(_label(value), spec, initial, t_end, cfg.samples, value, q, 0.0))
    return plans


def _custom_plans(cfg: ScenarioConfig) -> list[RunPlan]:
    spec = load_model(cfg.model_path).require_valid()
    if spec.dim != 2:
        initial = thermal_initial_state(spec, FlavorMatrix.flavor_projector(0, spec.dim))
    else:
        initial = thermal_initial_state(spec, left_projector())
    omega = _optional_average_frequency(spec)
    t_end = cfg.t_end
    if t_end is None:
        if not omega:
            raise ConfigError("custom models without g*sigma_1 lambdas need an explicit t_end")
        t_end = settings.RUN_PERIODS * 2.0 * np.pi / omega
    return [RunPlan("custom", spec, initial, t_end, cfg.samples, reference_frequency=omega)]


_PLANNERS = {
    "fig1": _ladder_plans,
    "fig2": _ladder_plans,
    "zeno": _zeno_plans,
    "bias_sweep": _bias_sweep_plans,
    "thermalize": _thermalize_plans,
    "custom": _custom_plans,
}


def plan_runs(cfg: ScenarioConfig) -> list[RunPlan]:
    return _PLANNERS[cfg.scenario](cfg)


###
# Execution
###


def _optional_average_frequency(spec: ModelSpec) -> float | None:
    try:
        return obs.thermal_average_frequency(spec)
    except ValueError:
        return None


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def summarize(
    plan: RunPlan, traj: Trajectory, scenario: str = "", temperature: float | None = None
) -> dict[str, Any]:
    spec = plan.spec
    frequency, frequency_error = None, None
    try:
        frequency = obs.estimate_frequency(traj)
    except NoDominantLineError as exc:
        frequency_error = str(exc)
    average = _optional_average_frequency(spec)
    omega = frequency or average

    p_right = 1.0 - traj.p_left
    deviation = None
    if scenario == "thermalize":
        deviation = float(np.max(np.abs(traj.populations[-1] - spec.boltzmann_weights())))

    return {
        "scenario": scenario,
        "label": plan.label,
        "coupling_log10": plan.coupling_log10,
        "q_over_v": plan.q_over_v,
        "b": plan.b,
        "temperature": spec.temperature if temperature is None else temperature,
        "t_end": plan.t_end,
        "samples": plan.samples,
        "method": traj.method,
        "frequency": frequency,
        "frequency_error": frequency_error,
        "thermal_average_frequency": average,
        "spectral_line_count": int(len(obs.spectral_lines(traj.times, traj.p_left))),
        "trace_drift_max": traj.trace_drift,
        "min_eigenvalue": traj.min_eigenvalue,
        "entropy_rate": obs.entropy_rate(traj.times, traj.entropy),
        "amplitude_decay_per_period": (
            obs.amplitude_decay_per_period(traj.times, traj.p_left, omega) if omega else None
        ),
        "final_p_left": float(traj.p_left[-1]),
        "min_p_left": float(traj.p_left.min()),
        "final_p_right": float(p_right[-1]),
        "transition_width": obs.transition_width(traj.times, p_right),
        "max_population_deviation": deviation,
    }


def execute(plan: RunPlan, scenario: str = "") -> RunResult:
    logger.debug(
        f"▶️ {scenario} {plan.label}: {plan.spec.n_levels} levels to t = {plan.t_end:.6g}"
    )
    traj = propagate(plan.spec, plan.initial, plan.t_end, plan.samples).check_invariants()
    return RunResult(plan, traj, summarize(plan, traj, scenario))


def _json_ready(summary: dict[str, Any]) -> dict[str, Any]:
    return {
        key: _finite_or_none(value) if isinstance(value, float) else value
        for key, value in summary.items()
    }


def write_result(result: ScenarioResult, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = result.config.scenario
    files = []
    for run in result.runs:
        path = out_dir / f"{scenario}_{run.plan.label}.csv"
        run.trajectory.to_frame(full=result.config.full).to_csv(
            path, index=False, float_format=settings.CSV_FLOAT_FORMAT
        )
        files.append(path)
    summary_path = out_dir / f"{scenario}_summary.json"
    document = {
        "config": result.config.to_dict(),
        "runs": [_json_ready(run.summary) for run in result.runs],
    }
    summary_path.write_text(json.dumps(document, indent=2), encoding="utf-8")
    files.append(summary_path)
    for path in files:
        logger.info(f"💾 wrote '{path}'")
    return files


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Run every plan of ``cfg``; write CSV and summary JSON when an output path is set."""
    logger.info(f"🚀 running scenario '{cfg.scenario}'")
    runs = [execute(plan, cfg.scenario) for plan in plan_runs(cfg)]
    result = ScenarioResult(cfg, runs)
    if cfg.output_path:
        result.files = write_result(result, cfg.output_path)
    return result


###
# Sweeps
###


def _sweep_row(cfg: ScenarioConfig) -> dict[str, Any]:
    try:
        plans = plan_runs(cfg)
        if len(plans) != 1:
            raise ConfigError(
                f"sweep rows must describe exactly one run, this config expands to {len(plans)}"
            )
        row = execute(plans[0], cfg.scenario).summary
        row["error"] = None
    except (BathSyncError, ValueError) as exc:
        row = {"scenario": cfg.scenario, "error": f"{type(exc).__name__}: {exc}"}
    return row


def sweep(
    configs: list[ScenarioConfig],
    workers: int | None = None,
    output_path: str | Path | None = None,
) -> pd.DataFrame:
    """One summary row per config, in input order. Failures land in the ``error`` column."""
    if not configs:
        raise ConfigError("sweep needs at least one config")
    workers = settings.WORKERS if workers is None else workers
    logger.info(f"🚀 sweeping {len(configs)} configs on {workers} worker(s)")
    if workers > 1:
        with pathos.pools.ProcessPool(nodes=workers) as pool:
            pool.restart()
            rows = pool.map(_sweep_row, configs)
    else:
        rows = [_sweep_row(cfg) for cfg in configs]

    frame = pd.DataFrame(rows, columns=["row"] + SUMMARY_COLUMNS + ["error"])
    frame["row"] = np.arange(len(rows))
    if output_path:
        frame.to_csv(output_path, index=False, float_format=settings.CSV_FLOAT_FORMAT)
        logger.info(f"💾 wrote '{output_path}'")
    return frame


def ladder_configs(base: ScenarioConfig, ladder) -> list[ScenarioConfig]:
    """One single-coupling config per ladder value, everything else copied from ``base``."""
    doc = base.to_dict()
    doc["output_path"] = None
    return [ScenarioConfig.from_dict({**doc, "coupling_log10": [value]}) for value in ladder]
