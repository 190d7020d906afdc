from pathlib import Path

import pytest
from pydantic import ValidationError

from staticlab.config import DEFAULT_F_MIN, LabConfig, Tolerances
from staticlab.suites import RunConfig, SuiteContext, SuiteName


def test_tolerance_overrides():
    tolerances = Tolerances().with_overrides({"bach": 1e-3})
    assert tolerances.bach == 1e-3
    assert tolerances.riemann == Tolerances().riemann
    assert Tolerances().with_overrides(None) == Tolerances()


def test_unknown_tolerance_is_rejected():
    with pytest.raises(ValueError, match="Unknown tolerance"):
        Tolerances().with_overrides({"bogus": 1.0})


def test_tolerances_must_be_positive():
    with pytest.raises(ValueError, match="riemann"):
        Tolerances(riemann=0.0)


def test_lab_config_from_env(monkeypatch, tmp_path):
    monkeypatch.setenv("STATICLAB_THREADS", "2")
    monkeypatch.setenv("STATICLAB_DEBUG", "yes")
    monkeypatch.setenv("STATICLAB_OUTPUT_DIR", str(tmp_path))
    monkeypatch.setenv("STATICLAB_MODELS_PATH", str(tmp_path / "models"))
    monkeypatch.delenv("STATICLAB_F_MIN", raising=False)
    config = LabConfig.from_env()
    assert config.threads == 2
    assert config.debug
    assert config.output_dir == tmp_path
    assert config.models_path == tmp_path / "models"
    assert config.f_min == DEFAULT_F_MIN
    record = config.to_record()
    assert record["threads"] == 2
    assert record["tolerances"]["bach"] == Tolerances().bach


def test_lab_config_defaults(monkeypatch):
    for name in ("THREADS", "DEBUG", "OUTPUT_DIR", "MODELS_PATH", "F_MIN", "SEED"):
        monkeypatch.delenv(f"STATICLAB_{name}", raising=False)
    config = LabConfig.from_env()
    assert config.threads == 4
    assert not config.debug
    assert config.models_path is None
    assert config.output_dir == Path("staticlab-reports")


@pytest.mark.parametrize(("name", "value"), [("THREADS", "many"), ("THREADS", "0"), ("F_MIN", "-1")])
def test_invalid_environment(monkeypatch, name, value):
    monkeypatch.setenv(f"STATICLAB_{name}", value)
    with pytest.raises(ValueError, match="Invalid staticlab environment"):
        LabConfig.from_env()


def test_run_config_defaults():
    config = RunConfig(models=["s3"])
    assert config.suites == [SuiteName.CURVATURE, SuiteName.STATICS]
    assert config.p_values == [2]
    context = SuiteContext.from_config(config)
    assert context.rule.order == 16
    assert context.rule.periodic_nodes == 32


def test_run_config_normalizes_powers():
    assert RunConfig(models=["s3"], p_values=[4, 2, 4]).p_values == [2, 4]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"models": []},
        {"models": ["s3"], "p_values": [1]},
        {"models": ["s3"], "p_values": []},
        {"models": ["s3"], "tolerances": {"bogus": 1.0}},
        {"models": ["s3"], "samples": 0},
        {"models": ["s3"], "suites": ["topology"]},
        {"models": ["s3"], "unexpected": True},
    ],
)
def test_run_config_validation(kwargs):
    with pytest.raises(ValidationError):
        RunConfig(**kwargs)


def test_global_suites_need_no_model():
    config = RunConfig(suites=["ode", "catalog"])
    assert config.models == []
    assert config.tolerance_set() == Tolerances()
