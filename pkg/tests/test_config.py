"""
Tests for settings, run configuration and error codes.
"""

import pytest
from pydantic import ValidationError

from graspalign.core.config import GlobalAlignOptions, Settings
from graspalign.core.errors import (
    BehindCameraError,
    DivergenceError,
    GraphError,
    IKError,
    InputError,
    NoSupervisionError,
)
from graspalign.schemas.run_config import RunConfig
from graspalign.utils.serialization import write_json


def test_defaults():
    """Test the default run configuration."""
    cfg = RunConfig.load()
    assert cfg.seed == 0
    assert cfg.threads == 1
    assert cfg.global_align.conf_threshold == 1.5
    assert cfg.ik.tol == 1e-4
    assert cfg.ik.max_iters == 300


def test_file_values_and_overrides(tmp_path):
    """Test that flags override file values section by section."""
    path = write_json(tmp_path / "cfg.json", {"seed": 3, "coord_align": {"n_starts": 2, "max_iters": 50}})
    cfg = RunConfig.load(path, {"seed": None, "coord_align": {"max_iters": 10, "n_starts": None}})
    assert cfg.seed == 3
    assert cfg.coord_align.n_starts == 2
    assert cfg.coord_align.max_iters == 10


def test_unknown_keys_are_rejected(tmp_path):
    """Test that typos in a config file are errors."""
    path = write_json(tmp_path / "cfg.json", {"coord_align": {"n_start": 2}})
    with pytest.raises(InputError):
        RunConfig.load(path)


def test_config_must_be_object(tmp_path):
    """Test that a config file must hold a JSON object."""
    path = write_json(tmp_path / "cfg.json", [1, 2])
    with pytest.raises(InputError):
        RunConfig.load(path)


def test_option_ranges():
    """Test field constraints on solver options."""
    with pytest.raises(ValidationError):
        GlobalAlignOptions(step=0.0)
    with pytest.raises(InputError):
        RunConfig.load(overrides={"threads": 0})


def test_settings_from_environment(monkeypatch):
    """Test the GRASPALIGN_ environment prefix."""
    monkeypatch.setenv("GRASPALIGN_LOG", "DEBUG")
    monkeypatch.setenv("GRASPALIGN_THREADS", "4")
    s = Settings()
    assert s.log == "debug"
    assert s.threads == 4
    assert s.logging.level == "DEBUG"


def test_settings_reject_bad_level(monkeypatch):
    """Test that an unknown log level is rejected."""
    monkeypatch.setenv("GRASPALIGN_LOG", "chatty")
    with pytest.raises(ValidationError):
        Settings()


def test_exit_codes():
    """Test the exit code of every error class."""
    assert InputError("x").exit_code == 2
    assert NoSupervisionError("x").exit_code == 2
    assert BehindCameraError("x", pose_index=1).exit_code == 2
    assert GraphError("x").exit_code == 3
    assert DivergenceError("x").exit_code == 4
    assert IKError("x").exit_code == 5
    assert isinstance(GraphError("x"), ValueError)


def test_warning_is_not_a_log_level(monkeypatch):
    """Test that only error, info and debug are accepted."""
    monkeypatch.setenv("GRASPALIGN_LOG", "warning")
    with pytest.raises(ValidationError):
        Settings()
    with pytest.raises(InputError):
        RunConfig.load(overrides={"log_level": "warning"})
    assert RunConfig.load(overrides={"log_level": "error"}).log_level == "error"
