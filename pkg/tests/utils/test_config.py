import json
from pathlib import Path

import pytest

from projeuler.core.errors import ConfigError
from projeuler.core.scheme import Admissibility, SchemeKind
from projeuler.utils.config import build_config, read_document, resolve_model

FIXTURES = Path(__file__).parent.parent / "fixtures"


def test_preset_defaults_fill_the_experiment():
    config = build_config("contract", overrides={"preset": "example1-multiplicative"})
    assert config.model.name == "example1-multiplicative"
    assert config.scheme.h == 0.01
    assert config.scheme.kind is SchemeKind.PROJECTED_EULER
    assert config.params == {"t0": -10.0, "T": 0.0, "xi": 0.8, "eta": -0.5, "m_paths": 100}
    assert config.seed == 0
    assert config.out == Path(".")
    assert not config.strict


def test_precedence_of_document_and_overrides():
    document = {
        "model": {"preset": "example2-additive"},
        "scheme": {"h": 0.02, "admissibility": "off"},
        "experiment": {"m_paths": 10, "strict": True},
        "seed": 3,
        "out": "run",
        "jobs": 2,
    }
    config = build_config("contract", document, {"seed": 9, "out": None, "m_paths": 5})
    assert config.scheme.h == 0.02
    assert config.scheme.admissibility is Admissibility.OFF
    assert config.params["m_paths"] == 5
    assert config.params["T"] == 5.0
    assert config.seed == 9
    assert config.out == Path("run")
    assert config.jobs == 2
    assert config.strict


def test_experiment_step_size():
    config = build_config("moments", overrides={"preset": "example1-multiplicative"})
    assert config.scheme.h == 0.05
    assert "h" not in config.params
    document = {"model": {"preset": "example1-multiplicative"}, "scheme": {"h": 0.1}}
    assert build_config("moments", document).scheme.h == 0.1


def test_preset_constant_overrides():
    document = {"model": {"preset": "example1-multiplicative", "alpha1": 0.5, "name": "tuned"}}
    config = build_config("simulate", document)
    assert config.model.alpha1 == 0.5
    assert config.model.name == "tuned"
    assert config.preset is not None and config.preset.name == "example1-multiplicative"


def test_profile_model_needs_a_step_size():
    section = {"profile": str(FIXTURES / "linear_profile.py")}
    params = {"t0": 0.0, "T": 1.0, "xi": 0.5}
    with pytest.raises(ConfigError, match="scheme.h"):
        build_config("simulate", {"model": section, "experiment": params})
    config = build_config(
        "simulate", {"model": section, "experiment": params, "scheme": {"h": 0.125}}
    )
    assert config.model.name == "fixture-linear"
    assert config.preset is None
    assert config.params == {"t0": 0.0, "T": 1.0, "xi": 0.5, "stream_id": 0}


def test_resolve_model_with_factory_profile():
    section = {"profile": str(FIXTURES / "linear_factory_profile.py"), "args": [2, 0.5]}
    model, preset = resolve_model(section)
    assert model.lam == (2.0,)
    assert preset is None


@pytest.mark.parametrize(
    "section",
    [
        {},
        {"preset": "example1-multiplicative", "profile": "x.py"},
        {"profile": "missing_profile.py"},
        {"preset": "example1-multiplicative", "alpha_1": 0.5},
        {"preset": "nope"},
    ],
)
def test_resolve_model_rejects(section):
    with pytest.raises(ConfigError):
        resolve_model(section)


@pytest.mark.parametrize(
    "command, document, overrides",
    [
        ("fly", {}, {"preset": "example2-additive"}),
        ("simulate", {}, {}),
        ("simulate", {"models": {}}, {"preset": "example2-additive"}),
        ("simulate", {}, {"preset": "example2-additive", "eta": 1.0}),
        ("simulate", {"scheme": {"step": 0.1}}, {"preset": "example2-additive"}),
        ("simulate", {"scheme": {"kind": "rk4"}}, {"preset": "example2-additive"}),
        ("simulate", {"seed": -1}, {"preset": "example2-additive"}),
        ("simulate", {"seed": 1.5}, {"preset": "example2-additive"}),
        ("simulate", {"jobs": "two"}, {"preset": "example2-additive"}),
    ],
)
def test_build_config_rejects(command, document, overrides):
    with pytest.raises(ConfigError):
        build_config(command, document, overrides)


def test_missing_parameters_are_named():
    document = {"model": {"profile": str(FIXTURES / "linear_profile.py")}, "scheme": {"h": 0.1}}
    with pytest.raises(ConfigError, match="'T'"):
        build_config("simulate", document, {"t0": 0.0, "xi": 1.0})


def test_check_model_defaults():
    config = build_config("check-model", overrides={"preset": "example2-additive"})
    assert config.params == {"radius": 2.0, "samples": 10_000}


def test_read_document(tmp_path):
    good = tmp_path / "run.json"
    good.write_text(json.dumps({"seed": 4}))
    assert read_document(good) == {"seed": 4}
    bad = tmp_path / "bad.json"
    bad.write_text("{seed: 4")
    with pytest.raises(ConfigError, match="not valid JSON"):
        read_document(bad)
    array = tmp_path / "array.json"
    array.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        read_document(array)
    with pytest.raises(ConfigError, match="cannot read"):
        read_document(tmp_path / "absent.json")
