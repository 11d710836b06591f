"""
Built-in SDE models.

The two presets are one-dimensional periodically forced equations with a cubic
drift, one with state-dependent noise and one with additive noise. The small
linear models have closed-form trajectories and serve as oracles.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Any, Callable, Dict, List

import numpy as np

from projeuler.core.errors import ConfigError
from projeuler.core.model import SdeModel


def _column(t: Any) -> np.ndarray:
    # `t` is a float or broadcastable against x[..., 0]
    return np.asarray(t, dtype=np.float64)[..., np.newaxis]


def _multiplicative_drift(t: Any, x: np.ndarray) -> np.ndarray:
    return np.asarray(x - x * x * x + np.cos(math.pi * (_column(t) % 2.0)))


def _multiplicative_diffusion(t: Any, x: np.ndarray) -> np.ndarray:
    return np.asarray((1.0 + x * x + np.cos(math.pi * (_column(t) % 2.0)))[..., np.newaxis])


def _additive_drift(t: Any, x: np.ndarray) -> np.ndarray:
    return np.asarray(-x * x * x + np.sin(2.0 * math.pi * (_column(t) % 1.0)))


def _unit_diffusion(t: Any, x: np.ndarray) -> np.ndarray:
    return np.ones(np.shape(x) + (1,))


def example1_multiplicative() -> SdeModel:
    """
    dX = (-2 pi X + X - X^3 + cos(pi t)) dt + (1 + X^2 + cos(pi t)) dW, period 2.
    """
    return SdeModel(
        name="example1-multiplicative",
        dim=1,
        noise_dim=1,
        lam=(2 * math.pi,),
        drift=_multiplicative_drift,
        diffusion=_multiplicative_diffusion,
        period=2.0,
        gamma=3.0,
        alpha1=1.0,
        p1=6.0,
        growth_c1=1.5,
        growth_c2=2.0,
    )


def example2_additive() -> SdeModel:
    """dX = (-pi X - X^3 + sin(2 pi t)) dt + dW, period 1."""
    return SdeModel(
        name="example2-additive",
        dim=1,
        noise_dim=1,
        lam=(math.pi,),
        drift=_additive_drift,
        diffusion=_unit_diffusion,
        period=1.0,
        gamma=3.0,
        alpha1=0.0,
        p1=6.0,
        growth_c1=1.5,
        growth_c2=1.0,
        additive=True,
        c_f=0.0,
        c_g=1.0,
    )


def _zero_drift(t: Any, x: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(x))


class ConstantDiffusion:
    """`g(t, x) = sigma * I`, a picklable callable."""

    def __init__(self, sigma: float, dim: int) -> None:
        self.sigma = sigma
        self.dim = dim

    def __call__(self, t: Any, x: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(x) + (self.dim,))
        out[...] = self.sigma * np.eye(self.dim)
        return out


class LinearDiffusion:
    """`g(t, x) = sigma * diag(x)`."""

    def __init__(self, sigma: float) -> None:
        self.sigma = sigma

    def __call__(self, t: Any, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.asarray(self.sigma * x[..., np.newaxis] * np.eye(x.shape[-1]))


def zero_model(lam: float = 1.0, dim: int = 1, period: float = 1.0) -> SdeModel:
    """`dX = -lam X dt`; the scheme reduces to `x_j = (1 - lam h)^j xi`."""
    return linear_model(lam=lam, sigma=0.0, dim=dim, period=period, name="zero")


def linear_model(
    lam: float = 1.0,
    sigma: float = 0.1,
    dim: int = 1,
    period: float = 1.0,
    name: str = "linear",
) -> SdeModel:
    """`dX = -lam X dt + sigma dW` with `d` independent noise components."""
    return SdeModel(
        name=name,
        dim=dim,
        noise_dim=dim,
        lam=(lam,) * dim,
        drift=_zero_drift,
        diffusion=ConstantDiffusion(sigma, dim),
        period=period,
        gamma=1.0,
        alpha1=0.0,
        p1=2.0,
        growth_c1=0.0,
        growth_c2=0.0,
        additive=True,
        c_f=0.0,
        c_g=abs(sigma) * math.sqrt(dim),
    )


def linear_diffusion_model(lam: float = 1.0, sigma: float = 0.1) -> SdeModel:
    """
    `dX = -lam X dt + sigma X dW`; the two-solution gap obeys an exact mean-square recursion.

    Coupled monotonicity holds with `alpha1 = 3/2 sigma^2` for `p1 = 2`.
    """
    return SdeModel(
        name="linear-diffusion",
        dim=1,
        noise_dim=1,
        lam=(lam,),
        drift=_zero_drift,
        diffusion=LinearDiffusion(sigma),
        period=1.0,
        gamma=1.0,
        alpha1=1.5 * sigma * sigma,
        p1=2.0,
        growth_c1=abs(sigma),
        growth_c2=0.0,
    )


@dataclasses.dataclass(frozen=True)
class Preset:
    """A named model together with the experiment settings it is usually run with."""

    name: str
    factory: Callable[[], SdeModel]
    description: str
    h: float
    experiments: Dict[str, Dict[str, Any]]

    def model(self) -> SdeModel:
        return self.factory()

    def defaults(self, experiment: str) -> Dict[str, Any]:
        return dict(self.experiments.get(experiment, {}))


PRESETS: Dict[str, Preset] = {
    p.name: p
    for p in (
        Preset(
            name="example1-multiplicative",
            factory=example1_multiplicative,
            description="cubic drift, state-dependent noise, period 2",
            h=0.01,
            experiments={
                "simulate": {"t0": -10.0, "T": 10.0, "xi": 0.3},
                "pullback": {"window": [0.0, 2.0], "k_max": 20, "tol": 1e-6, "xi": 0.3},
                "contract": {"t0": -10.0, "T": 0.0, "xi": 0.8, "eta": -0.5, "m_paths": 100},
                "periodicity": {
                    "t0": -10.0,
                    "xi": 0.3,
                    "observe": [2.0, 6.0],
                    "shift_periods": 1,
                },
                "converge": {
                    "t0": -10.0,
                    "T": 10.0,
                    "ref_levels": 14,
                    "test_exponents": [8, 9, 10, 11],
                    "m_paths": 200,
                    "xi": 0.3,
                },
                "moments": {"t0": 0.0, "steps": 10_000, "h": 0.05, "m_paths": 100, "xi": 0.3},
            },
        ),
        Preset(
            name="example2-additive",
            factory=example2_additive,
            description="cubic drift, additive noise, period 1",
            h=0.01,
            experiments={
                "simulate": {"t0": -5.0, "T": 15.0, "xi": 0.5},
                "pullback": {"window": [0.0, 1.0], "k_max": 20, "tol": 1e-6, "xi": 0.5},
                "contract": {"t0": -5.0, "T": 5.0, "xi": 0.8, "eta": -0.5, "m_paths": 100},
                "periodicity": {
                    "t0": -5.0,
                    "xi": 0.5,
                    "observe": [10.0, 13.0],
                    "shift_periods": 1,
                },
                "converge": {
                    "t0": -5.0,
                    "T": 15.0,
                    "ref_levels": 14,
                    "test_exponents": [8, 9, 10, 11],
                    "m_paths": 200,
                    "xi": 0.5,
                },
                "moments": {"t0": 0.0, "steps": 10_000, "h": 0.05, "m_paths": 100, "xi": 0.5},
            },
        ),
    )
}


def preset_names() -> List[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> Preset:
    """
    >>> get_preset("example2-additive").model().period
    1.0
    """
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; valid presets: {', '.join(preset_names())}"
        ) from None
