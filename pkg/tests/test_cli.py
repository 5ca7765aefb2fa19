import json

import pandas as pd
import pytest

from bathsync import cli
from bathsync.exceptions import IntegrationError

SIGMA_1_PAIRS = [[[0, 0], [0.5, 0]], [[0.5, 0], [0, 0]]]


def test_spectrum_csv(tmp_path):
    out = tmp_path / "spectrum.csv"
    assert cli.main(["spectrum", "--check", "--out", str(out)]) == 0

    frame = pd.read_csv(out)
    assert list(frame.columns) == ["pair_index", "E_even", "E_odd", "E_mean", "g"]
    assert list(frame["pair_index"]) == list(range(1, 11))


def test_spectrum_to_stdout(capsys):
    assert cli.main(["spectrum"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "pair_index,E_even,E_odd,E_mean,g"
    assert len(lines) == 11


def test_dipoles_csv(tmp_path):
    out = tmp_path / "dipoles.csv"
    assert cli.main(["dipoles", "--out", str(out)]) == 0

    frame = pd.read_csv(out)
    assert list(frame.columns) == ["j", "k", "x_jk"]
    assert len(frame) == 100


def test_rates_csv(tmp_path):
    out = tmp_path / "rates.csv"
    assert cli.main(["rates", "--coupling-log10", "1", "--b", "0.1", "--out", str(out)]) == 0

    frame = pd.read_csv(out)
    assert list(frame.columns) == ["i", "j", "E_i", "E_j", "gamma_ij"]
    assert len(frame) == 90
    assert (frame["gamma_ij"] >= 0).all()


def test_rates_take_one_coupling():
    assert cli.main(["rates", "--coupling-log10", "0", "1"]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--scenario", "custom", "--out", "unused"],
        ["run", "--scenario", "fig1"],
        ["run", "--out", "unused"],
    ],
)
def test_run_configuration_errors(argv):
    assert cli.main(argv) == 1


def test_run_rejects_an_invalid_model(tmp_path):
    model = tmp_path / "model.json"
    model.write_text(
        json.dumps(
            {
                "levels": [0, 1],
                "lambdas": [SIGMA_1_PAIRS, SIGMA_1_PAIRS],
                "zeta": {"b": 0},
                "gamma": [[0, 1], [1, 0]],
                "temperature": 1,
            }
        )
    )
    argv = ["run", "--scenario", "custom", "--model", str(model)]
    argv += ["--t-end", "5", "--out", str(tmp_path)]
    assert cli.main(argv) == 1


def test_run_writes_trajectories(tmp_path):
    argv = ["run", "--scenario", "thermalize", "--samples", "16", "--full", "--out", str(tmp_path)]
    assert cli.main(argv) == 0

    frame = pd.read_csv(tmp_path / "thermalize_coupling_+0.csv")
    assert list(frame.columns[:4]) == ["t", "p_left", "entropy", "pop_1"]
    assert "rho_10_11_im" in frame.columns
    assert len(frame) == 16
    summary = json.loads((tmp_path / "thermalize_summary.json").read_text())
    assert summary["runs"][0]["max_population_deviation"] < 1e-6


def test_run_from_config_file(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"scenario": "thermalize", "samples": 8}))
    assert cli.main(["run", "--config", str(config), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "thermalize_summary.json").exists()


def test_sweep_over_a_ladder(tmp_path):
    out = tmp_path / "sweep.csv"
    argv = ["sweep", "--scenario", "fig1", "--coupling-log10", "-1", "1"]
    argv += ["--samples", "256", "--out", str(out)]
    assert cli.main(argv) == 0

    frame = pd.read_csv(out)
    assert list(frame["coupling_log10"]) == [-1.0, 1.0]
    assert frame["error"].isna().all()


def test_sweep_over_a_config_list(tmp_path):
    config = tmp_path / "configs.json"
    config.write_text(
        json.dumps(
            [
                {"scenario": "thermalize", "samples": 8},
                {"scenario": "fig1", "coupling_log10": [-1, 1], "samples": 8},
            ]
        )
    )
    out = tmp_path / "sweep.csv"
    assert cli.main(["sweep", "--config", str(config), "--out", str(out)]) == 0

    frame = pd.read_csv(out)
    assert list(frame["row"]) == [0, 1]
    assert pd.isna(frame["error"][0])
    assert frame["error"][1].startswith("ConfigError")


def test_numerical_failures_exit_with_two(tmp_path, monkeypatch):
    def fail(cfg):
        raise IntegrationError("step budget exhausted")

    monkeypatch.setattr(cli, "run_scenario", fail)
    assert cli.main(["run", "--scenario", "fig1", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("temperature", ["-1", "0"])
def test_rates_reject_a_nonpositive_temperature(temperature):
    assert cli.main(["rates", "--temperature", temperature]) == 1


def test_run_rejects_a_ragged_model(tmp_path):
    model = tmp_path / "ragged.json"
    model.write_text(
        json.dumps(
            {
                "levels": [1],
                "lambdas": [[[[0, 0], [1, 0]], [[1, 0]]]],
                "zeta": {"b": 0},
                "gamma": [[0]],
                "temperature": 1,
            }
        )
    )
    argv = ["run", "--scenario", "custom", "--model", str(model)]
    argv += ["--t-end", "5", "--out", str(tmp_path)]
    assert cli.main(argv) == 1
