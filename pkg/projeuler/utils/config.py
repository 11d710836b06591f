"""
JSON experiment documents.

A document names a model (a preset, a preset with constant overrides, or a
Python profile), the scheme, the parameters of one experiment and the run
settings. Every key is optional as long as the model and the step size can be
resolved; preset defaults fill the experiment parameters.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from os import PathLike
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from projeuler.core.errors import ConfigError
from projeuler.core.model import SdeModel, model_from_dict, model_to_dict
from projeuler.core.scheme import Admissibility, SchemeConfig, SchemeKind
from projeuler.models.examples import Preset, get_preset
from projeuler.utils.load_model import load_model

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {"model", "scheme", "experiment", "seed", "out", "plot", "jobs"}

# Required parameters of each experiment and the defaults of the optional ones.
EXPERIMENTS: Dict[str, Tuple[List[str], Dict[str, Any]]] = {
    "simulate": (["t0", "T", "xi"], {"stream_id": 0}),
    "pullback": (["window", "k_max", "tol", "xi"], {"stream_id": 0}),
    "contract": (["t0", "T", "xi", "eta", "m_paths"], {}),
    "periodicity": (["t0", "xi", "observe", "shift_periods"], {"stream_id": 0}),
    "converge": (["t0", "T", "ref_levels", "test_exponents", "m_paths", "xi"], {}),
    "moments": (["t0", "steps", "m_paths", "xi"], {}),
    "check-model": ([], {"radius": 2.0, "samples": 10_000}),
}


@dataclasses.dataclass
class ExperimentConfig:
    command: str
    model: SdeModel
    scheme: SchemeConfig
    params: Dict[str, Any]
    seed: int = 0
    out: Path = Path(".")
    plot: bool = False
    jobs: Optional[int] = None
    strict: bool = False
    preset: Optional[Preset] = None


def read_document(path: Union[str, PathLike]) -> Dict[str, Any]:
    try:
        with open(path) as fp:
            document = json.load(fp)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return document


def resolve_model(section: Mapping[str, Any]) -> Tuple[SdeModel, Optional[Preset]]:
    """
    Model of a `model` section: `{"preset": name, **constant overrides}` or
    `{"profile": path, "args": [...]}`.
    """
    section = dict(section)
    if "profile" in section:
        if "preset" in section:
            raise ConfigError("model section names both a preset and a profile")
        args = section.pop("args", [])
        path = section.pop("profile")
        if section:
            raise ConfigError(f"unknown keys for a profile model: {sorted(section)}")
        try:
            return load_model(path, *(str(a) for a in args)), None
        except (FileNotFoundError, ImportError, NotImplementedError, TypeError) as e:
            raise ConfigError(f"cannot load model profile {path}: {e}") from e
    if "preset" not in section:
        raise ConfigError("model section needs either 'preset' or 'profile'")
    preset = get_preset(section.pop("preset"))
    model = preset.model()
    if section:
        document = model_to_dict(model)
        document.update(section)
        model = model_from_dict(document, model.drift, model.diffusion)
        logger.info(f"overriding constants of preset {preset.name}: {sorted(section)}")
    return model, preset


def _scheme(
    section: Mapping[str, Any], preset: Optional[Preset], experiment_h: Optional[float]
) -> SchemeConfig:
    section = dict(section)
    unknown = set(section) - {"h", "kind", "admissibility"}
    if unknown:
        raise ConfigError(f"unknown scheme keys: {sorted(unknown)}")
    h = section.get("h", experiment_h)
    if h is None and preset is not None:
        h = preset.h
    if h is None:
        raise ConfigError("scheme.h is required for models without a preset")
    return SchemeConfig(
        h=float(h),
        kind=section.get("kind", SchemeKind.PROJECTED_EULER),
        admissibility=section.get("admissibility", Admissibility.WARN),
    )


def _params(
    command: str, section: Mapping[str, Any], preset: Optional[Preset]
) -> Tuple[Dict[str, Any], bool, Optional[float]]:
    required, optional = EXPERIMENTS[command]
    params: Dict[str, Any] = dict(optional)
    if preset is not None:
        params.update(preset.defaults(command))
    params.update(section)
    strict = bool(params.pop("strict", False))
    h = params.pop("h", None)
    unknown = set(params) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown parameters for {command}: {sorted(unknown)}")
    missing = [key for key in required if key not in params]
    if missing:
        raise ConfigError(f"missing parameters for {command}: {missing}")
    return params, strict, h


def build_config(
    command: str,
    document: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """
    Merge preset defaults, the JSON `document` and command line `overrides`, in
    increasing priority.

    `overrides` may hold `preset`, `seed`, `out`, `plot`, `jobs` and experiment
    parameters; `None` values are skipped.
    """
    if command not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {command!r}")
    document = dict(document or {})
    unknown = set(document) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    model_section = dict(document.get("model", {}))
    if "preset" in overrides:
        model_section = {"preset": overrides.pop("preset")}
    if not model_section:
        raise ConfigError("no model given; use --preset or a 'model' section")
    model, preset = resolve_model(model_section)

    experiment = dict(document.get("experiment", {}))
    for key in ("seed", "out", "plot", "jobs"):
        if key in overrides:
            document[key] = overrides.pop(key)
    experiment.update(overrides)
    params, strict, experiment_h = _params(command, experiment, preset)
    scheme = _scheme(document.get("scheme", {}), preset, experiment_h)

    seed = document.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    jobs = document.get("jobs")
    if jobs is not None and (not isinstance(jobs, int) or jobs < 0):
        raise ConfigError(f"jobs must be a nonnegative integer, got {jobs!r}")
    return ExperimentConfig(
        command=command,
        model=model,
        scheme=scheme,
        params=params,
        seed=seed,
        out=Path(document.get("out", ".")),
        plot=bool(document.get("plot", False)),
        jobs=jobs,
        strict=strict,
        preset=preset,
    )
