"""Command-line entry point.

Exit codes: 0 on success, 1 for configuration or model-validation errors, 2 for numerical
failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import logging.config
import sys
from pathlib import Path

import numpy as np

from bathsync import configuration as settings
from bathsync.bath_rates import rates_frame
from bathsync.doublewell import build_model, compute_spectrum, default_geometry, grid_spectrum
from bathsync.exceptions import BathSyncError, ConfigError, ModelValidationError, SpectrumError
from bathsync.scenarios import (
    SCENARIOS,
    ScenarioConfig,
    coupling_from_log10,
    ladder_configs,
    run_scenario,
    sweep,
)

logger = logging.getLogger("bathsync.cli")

GRID_CHECK_RTOL = 1e-4


def _emit(frame, out):
    if out:
        frame.to_csv(out, index=False, float_format=settings.CSV_FLOAT_FORMAT)
        logger.info(f"💾 wrote '{out}'")
    else:
        frame.to_csv(sys.stdout, index=False, float_format=settings.CSV_FLOAT_FORMAT)


def _cmd_spectrum(args) -> int:
    geometry = default_geometry()
    spectrum = compute_spectrum(geometry)
    if args.check:
        roots = np.sort(np.concatenate([[p.E_even, p.E_odd] for p in spectrum.pairs]))
        grid = grid_spectrum(geometry, n_states=len(roots))
        deviation = float(np.max(np.abs(roots - grid) / grid))
        if deviation > GRID_CHECK_RTOL:
            raise SpectrumError(
                f"bound states deviate from the grid Hamiltonian by {deviation:.3g} relative"
            )
        logger.info(f"✅ bound states match the grid Hamiltonian within {deviation:.3g} relative")
    _emit(spectrum.to_frame(), args.out)
    return 0


def _cmd_dipoles(args) -> int:
    spectrum = compute_spectrum(default_geometry())
    _emit(spectrum.dipoles_frame(), args.out)
    return 0


def _cmd_rates(args) -> int:
    temperature = settings.TEMPERATURE if args.temperature is None else args.temperature
    if not temperature > 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    ladder = args.coupling_log10 or [0.0]
    if len(ladder) != 1:
        raise ConfigError("rates takes a single --coupling-log10 value")
    spec = build_model(coupling_from_log10(ladder[0], temperature), temperature, args.b or 0.0)
    _emit(rates_frame(spec.levels, spec.gamma), args.out)
    return 0


def _config_from_args(args, base: dict | None = None) -> ScenarioConfig:
    doc = dict(base or {})
    overrides = {
        "scenario": args.scenario,
        "coupling_log10": args.coupling_log10,
        "b": args.b,
        "temperature": args.temperature,
        "t_end": args.t_end,
        "samples": args.samples,
        "model_path": getattr(args, "model", None),
        "output_path": getattr(args, "out", None),
        "full": getattr(args, "full", None) or None,
    }
    doc.update({key: value for key, value in overrides.items() if value is not None})
    return ScenarioConfig.from_dict(doc)


def _read_json(path) -> dict | list:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc


def _cmd_run(args) -> int:
    base = _read_json(args.config) if args.config else None
    if base is not None and not isinstance(base, dict):
        raise ConfigError("run --config must hold a single JSON object")
    cfg = _config_from_args(args, base)
    if not cfg.output_path:
        raise ConfigError("run needs an output directory (--out or output_path)")
    result = run_scenario(cfg)
    logger.info(f"✅ scenario '{cfg.scenario}' finished with {len(result.runs)} run(s)")
    return 0


def _cmd_sweep(args) -> int:
    document = _read_json(args.config) if args.config else None
    if isinstance(document, list):
        configs = [ScenarioConfig.from_dict({**doc, "output_path": None}) for doc in document]
    else:
        base = _config_from_args(args, document)
        ladder = base.coupling_log10 or tuple(settings.SWEEP_LADDER)
        configs = ladder_configs(base, ladder)
    frame = sweep(configs, workers=args.workers, output_path=None)
    _emit(frame, args.out)
    failed = int(frame["error"].notna().sum())
    if failed:
        logger.warning(f"⚠️ {failed} of {len(frame)} sweep rows failed, see the error column")
    return 0


def _scenario_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--scenario", choices=SCENARIOS, help="scenario preset")
    parser.add_argument("--coupling-log10", type=float, nargs="+", help="log10 coupling ladder")
    parser.add_argument(
        "--b", type=float, help="flavor asymmetry of the bath coupling, zeta = 1 + b sigma_3"
    )
    parser.add_argument("--temperature", type=float, help="bath temperature")
    parser.add_argument("--t-end", type=float, help="run length")
    parser.add_argument("--samples", type=int, help="output samples per run")
    parser.add_argument("--config", help="JSON config file; flags override its fields")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bathsync", description="Thermal-bath synchronization of tunneling modes."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    spectrum = commands.add_parser("spectrum", help="double-well doublets as CSV")
    spectrum.add_argument("--out", help="CSV path, stdout when omitted")
    spectrum.add_argument(
        "--check", action="store_true", help="verify against the finite-difference grid Hamiltonian"
    )
    spectrum.set_defaults(handler=_cmd_spectrum)

    dipoles = commands.add_parser("dipoles", help="infinite-well dipole elements as CSV")
    dipoles.add_argument("--out", help="CSV path, stdout when omitted")
    dipoles.set_defaults(handler=_cmd_dipoles)

    rates = commands.add_parser("rates", help="thermal transition rates as CSV")
    rates.add_argument("--coupling-log10", type=float, nargs="+", help="log10 coupling")
    rates.add_argument("--b", type=float, help="flavor asymmetry of the bath coupling")
    rates.add_argument("--temperature", type=float, help="bath temperature")
    rates.add_argument("--out", help="CSV path, stdout when omitted")
    rates.set_defaults(handler=_cmd_rates)

    run = commands.add_parser(
        "run", help="run a scenario, writing trajectory CSVs and a summary JSON"
    )
    _scenario_arguments(run)
    run.add_argument("--model", help="model JSON for the custom scenario")
    run.add_argument("--out", help="output directory")
    run.add_argument("--full", action="store_true", help="also emit every density-matrix entry")
    run.set_defaults(handler=_cmd_run)

    sweep_parser = commands.add_parser("sweep", help="one summary row per coupling or per config")
    _scenario_arguments(sweep_parser)
    sweep_parser.add_argument("--workers", type=int, help="parallel worker processes")
    sweep_parser.add_argument("--out", help="CSV path, stdout when omitted")
    sweep_parser.set_defaults(handler=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    logging.config.dictConfig(settings.LOGGING)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ModelValidationError) as exc:
        logger.error(f"❌ {exc}")
        return 1
    except BathSyncError as exc:
        logger.error(f"❌ {type(exc).__name__}: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
