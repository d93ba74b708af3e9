"""
Tests for environment-driven settings
"""

import pytest

from config.settings import Settings


def test_defaults(monkeypatch):
    for name in ("LOG_LEVEL", "DEFAULT_TRIALS", "BASE_SEED", "DP_TOLERANCE", "EPS_FEAS", "OUTPUT_DIR"):
        monkeypatch.delenv(name, raising=False)
    settings = Settings()
    assert settings.LOG_LEVEL == "INFO"
    assert settings.DEFAULT_TRIALS == 1000
    assert settings.DP_TOLERANCE == 1e-10
    assert settings.EPS_FEAS == 1e-9
    assert settings.OUTPUT_DIR == settings.PROJECT_ROOT / "output"
    assert settings.SCENARIOS_DIR.name == "scenarios"


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("LOG_LEVEL", "debug")
    monkeypatch.setenv("BASE_SEED", str(2 ** 64 - 1))
    monkeypatch.setenv("MC_WORKERS", "4")
    monkeypatch.setenv("RECORD_WALLCLOCK", "TRUE")
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path))
    settings = Settings()
    assert settings.LOG_LEVEL == "DEBUG"
    assert settings.BASE_SEED == 2 ** 64 - 1
    assert settings.MC_WORKERS == 4
    assert settings.RECORD_WALLCLOCK
    assert settings.OUTPUT_DIR == tmp_path
    assert "workers=4" in repr(settings)


@pytest.mark.parametrize("name, value", [
    ("LOG_LEVEL", "LOUD"),
    ("DEFAULT_TRIALS", "0"),
    ("BASE_SEED", "-1"),
    ("MC_WORKERS", "0"),
    ("DP_TOLERANCE", "0"),
    ("EPS_FEAS", "-1e-9"),
    ("EXPORT_STATE_LIMIT", "0"),
])
def test_invalid_values_are_rejected(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValueError):
        Settings()


def test_loose_tolerances_only_warn(monkeypatch, caplog):
    monkeypatch.setenv("DP_TOLERANCE", "1e-3")
    monkeypatch.setenv("DEFAULT_TRIALS", "10")
    settings = Settings()
    assert settings.DP_TOLERANCE == 1e-3
    assert "DP_TOLERANCE" in caplog.text
    assert "DEFAULT_TRIALS" in caplog.text
