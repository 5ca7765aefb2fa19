import os

import pytest

from bathsync import configuration as settings
from bathsync.configuration import configuration as defaults


@pytest.fixture
def override_dir(tmp_path):
    yield tmp_path
    settings.reload(os.environ.get("BATHSYNC_CONFIG_DIR"))


def test_package_defaults_are_loaded():
    assert defaults.TEMPERATURE == 5.0
    assert settings.WELL_BOUND_STATES == 20
    assert settings.FIG1_LADDER == [-3.0, -1.0, 1.0, 3.0]
    assert "loggers" in settings.LOGGING


def test_override_directory_wins(override_dir):
    (override_dir / "configuration.py").write_text("TEMPERATURE = 7.5\n")
    (override_dir / "extra.py").write_text("SAMPLES = 64\n")
    settings.reload(str(override_dir))

    assert settings.TEMPERATURE == 7.5
    assert settings.SAMPLES == 64
    assert settings.WELL_A == 1.0


def test_missing_override_directory(override_dir):
    with pytest.raises(ImportError):
        settings.reload(str(override_dir / "missing"))


def test_unknown_setting():
    with pytest.raises(AttributeError):
        settings.NOT_A_SETTING


def test_environment_mapping(monkeypatch):
    monkeypatch.setenv("BATHSYNC_TEST_LADDER", "-1  0.5 2")

    ladder = defaults._environ_get_and_map("BATHSYNC_TEST_LADDER", "", defaults._AS_FLOAT_LIST)
    assert ladder == [-1.0, 0.5, 2.0]
    unset = defaults._environ_get_and_map("BATHSYNC_TEST_UNSET", "", defaults._AS_OPTIONAL_FLOAT)
    assert unset is None
    assert defaults._environ_get_and_map("BATHSYNC_TEST_UNSET", "3", defaults._AS_INT) == 3
    assert defaults._environ_get_and_map("BATHSYNC_TEST_UNSET") is None
