"""
SDE problems of the semi-linear form dX = (AX + f(t, X)) dt + g(t, X) dW.

`A` is held by its spectrum only: `A = diag(-lam)` in the working basis. The
coefficient functions follow one calling convention across the package:

- `drift(t, x)` takes `x` with shape `(..., d)` and returns shape `(..., d)`.
- `diffusion(t, x)` takes `x` with shape `(..., d)` and returns `(..., d, m)`.
- `t` is either a float or an array broadcastable against `x[..., 0]`.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from projeuler.core.errors import ConfigError

logger = logging.getLogger(__name__)

Coefficient = Callable[[Any, np.ndarray], np.ndarray]

# Number of uniform time samples over one period used for sup_t estimates.
SUP_SAMPLES = 10_000
# Probes draw their samples in fixed-size chunks so the result never depends on memory.
_PROBE_CHUNK = 10_000


@dataclasses.dataclass(frozen=True)
class SdeModel:
    """
    A semi-linear SDE together with the constants of its standing assumptions.

    `alpha1` is the coupled-monotonicity constant, `p1` the moment exponent,
    `growth_c1` and `growth_c2` the polynomial growth constants of the drift
    (and diffusion) and `gamma` their growth exponent. Additive models also carry
    the one-sided Lipschitz constant `c_f` of the drift and the bound `c_g` on the
    diffusion.
    """

    name: str
    dim: int
    noise_dim: int
    lam: Tuple[float, ...]
    drift: Coefficient
    diffusion: Coefficient
    period: float
    gamma: float
    alpha1: float
    p1: float
    growth_c1: float
    growth_c2: float
    additive: bool = False
    c_f: Optional[float] = None
    c_g: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", tuple(float(v) for v in self.lam))
        self.validate()

    def validate(self) -> None:
        if self.dim < 1 or self.noise_dim < 1:
            raise ConfigError(
                f"dim and noise_dim must be positive, got {self.dim}, {self.noise_dim}"
            )
        if len(self.lam) != self.dim:
            raise ConfigError(f"lambda must have {self.dim} entries, got {len(self.lam)}")
        if any(v <= 0 for v in self.lam):
            raise ConfigError(f"every eigenvalue must be positive, got {list(self.lam)}")
        if any(a > b for a, b in zip(self.lam, self.lam[1:])):
            raise ConfigError(f"lambda must be sorted ascending, got {list(self.lam)}")
        if not self.period > 0:
            raise ConfigError(f"period must be positive, got {self.period}")
        if not self.p1 > 1:
            raise ConfigError(f"p1 must exceed 1, got {self.p1}")
        if not 1 <= self.gamma < (self.p1 + 1) / 2:
            raise ConfigError(
                f"gamma must lie in [1, (p1+1)/2) = [1, {(self.p1 + 1) / 2:g}), got {self.gamma}"
            )
        if not self.alpha1 < self.lambda1:
            raise ConfigError(f"alpha1={self.alpha1} must be below lambda_1={self.lambda1}")
        if self.growth_c1 < 0 or self.growth_c2 < 0:
            raise ConfigError("growth constants must be nonnegative")
        if self.additive:
            if self.c_f is None or self.c_g is None:
                raise ConfigError("additive models must define c_f and c_g")
            if not self.c_f < self.lambda1:
                raise ConfigError(f"c_f={self.c_f} must be below lambda_1={self.lambda1}")

    @property
    def lambda1(self) -> float:
        return self.lam[0]

    @property
    def lambda_d(self) -> float:
        return self.lam[-1]

    @property
    def lam_array(self) -> np.ndarray:
        return np.asarray(self.lam, dtype=np.float64)

    @property
    def dissipation_gap(self) -> float:
        """`lambda_1 - a` where `a` is `c_f` for additive models and `alpha1` otherwise."""
        a = self.c_f if self.additive and self.c_f is not None else self.alpha1
        return self.lambda1 - a

    def reduce_time(self, t: float) -> float:
        """Reduce `t` into `[0, period)`."""
        return t % self.period

    def with_constants(self, **overrides: Any) -> SdeModel:
        return dataclasses.replace(self, **overrides)


@dataclasses.dataclass(frozen=True)
class SchemeConstants:
    l1: float
    l2: float
    alpha2: float
    c0: float
    epsilon: float
    p2: float


_CONSTANT_KEYS = (
    "name",
    "dim",
    "noise_dim",
    "period",
    "gamma",
    "alpha1",
    "p1",
    "growth_c1",
    "growth_c2",
    "additive",
    "c_f",
    "c_g",
)


def model_to_dict(model: SdeModel) -> Dict[str, Any]:
    """The JSON-able constant part of `model`; `lambda` is stored under its own name."""
    doc: Dict[str, Any] = {key: getattr(model, key) for key in _CONSTANT_KEYS}
    doc["lambda"] = list(model.lam)
    return doc


def model_from_dict(
    document: Dict[str, Any], drift: Coefficient, diffusion: Coefficient
) -> SdeModel:
    """
    Build a model from a JSON document mirroring `SdeModel` and two coefficient functions.

    Unknown keys are rejected so that typos in configuration files surface early.
    """
    known = set(_CONSTANT_KEYS) | {"lambda"}
    unknown = set(document) - known
    if unknown:
        raise ConfigError(f"unknown model keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in document.items() if k != "lambda"}
    if "lambda" not in document:
        raise ConfigError("model document must define 'lambda'")
    kwargs.setdefault("name", "custom")
    try:
        return SdeModel(lam=tuple(document["lambda"]), drift=drift, diffusion=diffusion, **kwargs)
    except TypeError as e:
        raise ConfigError(f"incomplete model document: {e}") from e


def derive_coercivity(
    alpha1: float,
    epsilon: float,
    p1: float,
    p2: float,
    f0_norm: float,
    g0_norm: float,
) -> Tuple[float, float]:
    """
    Coercivity pair `(alpha2, c0)` implied by coupled monotonicity with `y = 0`.

    >>> derive_coercivity(0.0, 0.5, 2.0, 1.0, 1.0, 1.0)
    (0.5, 4.75)
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 1 <= p2 < p1:
        raise ValueError(f"p2 must lie in [1, p1) = [1, {p1}), got {p2}")
    if f0_norm < 0 or g0_norm < 0:
        raise ValueError("offset norms must be nonnegative")
    k = 2 * p1 - 1
    g0_sq = g0_norm**2
    c0 = f0_norm**2 / (2 * epsilon) + k**2 / (4 * (p1 - p2)) * g0_sq + k / 2 * g0_sq
    return alpha1 + epsilon, c0


def _sup_over_period(model: SdeModel, fn: Coefficient, trailing: int) -> float:
    t = model.period * np.arange(SUP_SAMPLES, dtype=np.float64) / SUP_SAMPLES
    x = np.zeros((SUP_SAMPLES, model.dim))
    values = np.asarray(fn(t, x), dtype=np.float64)
    values = np.broadcast_to(values, (SUP_SAMPLES,) + values.shape[values.ndim - trailing :])
    values = values.reshape(SUP_SAMPLES, -1)
    return float(np.max(np.sqrt(np.sum(values**2, axis=1))))


def offset_norms(model: SdeModel) -> Tuple[float, float]:
    """Sampled `sup_t ||f(t, 0)||` and `sup_t ||g(t, 0)||` over one period."""
    f0 = _sup_over_period(model, model.drift, 1)
    g0 = _sup_over_period(model, model.diffusion, 2)
    return f0, g0


def scheme_constants(
    model: SdeModel, epsilon: Optional[float] = None, p2: float = 1.0
) -> SchemeConstants:
    """
    Constants `L1 = 2 C2`, `L2 = 3 C1` and the coercivity pair of `model`.

    `epsilon` defaults to half the gap `lambda_1 - alpha1`.
    """
    gap = model.lambda1 - model.alpha1
    if epsilon is None:
        epsilon = gap / 2
    if not 0 < epsilon < gap:
        raise ValueError(
            f"epsilon must lie in (0, lambda_1 - alpha1) = (0, {gap:g}), got {epsilon}"
        )
    f0, g0 = offset_norms(model)
    alpha2, c0 = derive_coercivity(model.alpha1, epsilon, model.p1, p2, f0, g0)
    return SchemeConstants(
        l1=2 * model.growth_c2,
        l2=3 * model.growth_c1,
        alpha2=alpha2,
        c0=c0,
        epsilon=epsilon,
        p2=p2,
    )


def admissible_step_bound(
    model: SdeModel,
    consts: SchemeConstants,
    delta1: Optional[float] = None,
    delta2: Optional[float] = None,
) -> float:
    """
    Upper end of the step-size window of the mean-square error estimates.

    Additive models use `c_f` in place of `alpha1`. `delta1 = delta2 = 0` gives the
    window of the two-solution contraction estimate.
    """
    gap = model.dissipation_gap
    if delta1 is None:
        delta1 = gap / 2
    if delta2 is None:
        delta2 = 1.0
    if not 0 <= delta1 < gap:
        raise ValueError(f"delta1 must lie in [0, {gap:g}), got {delta1}")
    if delta2 < 0:
        raise ValueError(f"delta2 must be nonnegative, got {delta2}")
    half = (model.p1 + 1) / 2
    first = gap**half / ((1 + delta2) ** half * (model.lambda_d + consts.l2) ** (model.p1 + 1))
    return min(first, 1 / (gap - delta1), 1.0)


def theoretical_order(model: SdeModel) -> float:
    """Strong order of the projected Euler scheme: 1 under additive noise, 0.5 otherwise."""
    return 1.0 if model.additive else 0.5


def _ball(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal((n, dim))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    r = radius * rng.random((n, 1)) ** (1.0 / dim)
    return np.asarray(direction / norms * r)


def _frobenius(a: np.ndarray) -> np.ndarray:
    return np.asarray(np.sqrt(np.sum(a * a, axis=(-2, -1))))


def _chunks(samples: int) -> Tuple[int, ...]:
    full, rest = divmod(samples, _PROBE_CHUNK)
    return (_PROBE_CHUNK,) * full + ((rest,) if rest else ())


def probe_monotonicity(model: SdeModel, radius: float, samples: int, seed: int) -> float:
    """
    Largest sampled coupled-monotonicity quotient over the ball of `radius`.

    The result is an empirical lower bound on the smallest valid `alpha1` on that
    region; a value above `model.alpha1` means the recorded constant is violated there.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    rng = np.random.default_rng(seed)
    weight = (2 * model.p1 - 1) / 2
    best = -math.inf
    for n in _chunks(samples):
        t = model.period * rng.random(n)
        x = _ball(rng, n, model.dim, radius)
        y = _ball(rng, n, model.dim, radius)
        dx = x - y
        dist_sq = np.sum(dx * dx, axis=1)
        keep = dist_sq > 0
        df = model.drift(t, x) - model.drift(t, y)
        dg = model.diffusion(t, x) - model.diffusion(t, y)
        num = np.sum(dx * df, axis=1) + weight * _frobenius(dg) ** 2
        if np.any(keep):
            best = max(best, float(np.max(num[keep] / dist_sq[keep])))
    return best


def probe_growth(
    model: SdeModel, radius: float, samples: int, seed: int
) -> Tuple[float, float]:
    """
    Sampled lower bounds `(c1, c2)` on the growth constants over the ball of `radius`.

    `c1` bounds the spatial increments of both coefficients against
    `(1 + |x|^(gamma-1) + |y|^(gamma-1)) |x - y|`, `c2` bounds `|f(t, x)|` against
    `1 + |x|^gamma`.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    rng = np.random.default_rng(seed)
    c1 = 0.0
    c2 = 0.0
    g = model.gamma
    for n in _chunks(samples):
        t = model.period * rng.random(n)
        x = _ball(rng, n, model.dim, radius)
        y = _ball(rng, n, model.dim, radius)
        nx = np.linalg.norm(x, axis=1)
        ny = np.linalg.norm(y, axis=1)
        dist = np.linalg.norm(x - y, axis=1)
        keep = dist > 0
        fx = model.drift(t, x)
        df = np.linalg.norm(fx - model.drift(t, y), axis=1)
        dg = _frobenius(model.diffusion(t, x) - model.diffusion(t, y))
        scale = (1 + nx ** (g - 1) + ny ** (g - 1)) * dist
        if np.any(keep):
            c1 = max(c1, float(np.max(np.maximum(df, dg)[keep] / scale[keep])))
        c2 = max(c2, float(np.max(np.linalg.norm(fx, axis=1) / (1 + nx**g))))
    return c1, c2


def periodicity_defect(
    model: SdeModel, samples: int = 1000, seed: int = 0, radius: float = 2.0
) -> float:
    """
    Largest sampled `|f(t + tau, x) - f(t, x)|` (or the same for `g`).

    Times are drawn from a dyadic lattice of the period so that `t + tau` is
    exactly representable and exact periodicity is reported as exactly 0.
    """
    rng = np.random.default_rng(seed)
    t = model.period * rng.integers(0, 2**20, size=samples) / 2**20
    x = _ball(rng, samples, model.dim, radius)
    shifted = t + model.period
    df = np.linalg.norm(model.drift(shifted, x) - model.drift(t, x), axis=1)
    dg = _frobenius(model.diffusion(shifted, x) - model.diffusion(t, x))
    return float(max(np.max(df), np.max(dg)))
