from __future__ import annotations

import dataclasses
import enum
import logging
from typing import Optional, Sequence, Union

import numpy as np

from projeuler.core.errors import AdmissibilityError, BlowUpError, ConfigError
from projeuler.core.model import SdeModel, admissible_step_bound, scheme_constants
from projeuler.core.wiener import BrownianPath, increments, on_grid

logger = logging.getLogger(__name__)

# States whose norm exceeds the cap by less than this relative slack count as inside
# the ball, which keeps the projection idempotent under rounding.
CAP_RTOL = 16 * np.finfo(np.float64).eps


class SchemeKind(str, enum.Enum):
    PROJECTED_EULER = "projected-euler"
    EULER_MARUYAMA = "euler-maruyama"


class Admissibility(str, enum.Enum):
    STRICT = "strict"
    WARN = "warn"
    OFF = "off"


@dataclasses.dataclass(frozen=True)
class SchemeConfig:
    h: float
    kind: SchemeKind = SchemeKind.PROJECTED_EULER
    admissibility: Admissibility = Admissibility.WARN

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", SchemeKind(self.kind))
            object.__setattr__(self, "admissibility", Admissibility(self.admissibility))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if not self.h > 0:
            raise ConfigError(f"step size must be positive, got {self.h}")
        if self.admissibility is not Admissibility.OFF and self.h > 1:
            raise ConfigError(f"step size {self.h} exceeds 1; set admissibility to 'off'")


@dataclasses.dataclass(frozen=True, eq=False)
class Trajectory:
    """States of one simulated path; `states[j]` is the state at `t0 + j * h`."""

    t0: float
    h: float
    states: np.ndarray
    model_id: str
    seed: int
    stream_id: int

    @property
    def steps(self) -> int:
        return int(self.states.shape[0]) - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.steps + 1) * self.h

    def time(self, j: int) -> float:
        return self.t0 + j * self.h


def project(x: np.ndarray, h: float, gamma: float) -> np.ndarray:
    """
    Radial truncation of `x` onto the ball of radius `h ** (-1 / (2 gamma))`.

    Works on the last axis, so batches of states are projected row by row.

    >>> project(np.array([30.0, 40.0]), 0.25, 1.0)
    array([1.2, 1.6])
    """
    x = np.asarray(x, dtype=np.float64)
    cap = h ** (-1.0 / (2.0 * gamma))
    norm = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm <= cap * (1 + CAP_RTOL), 1.0, cap / norm)
    return np.asarray(x * scale)


def _advance(
    model: SdeModel,
    t: float,
    y: np.ndarray,
    h: float,
    dW: np.ndarray,
) -> np.ndarray:
    tr = model.reduce_time(t)
    drift = np.asarray(model.drift(tr, y))
    diffusion = np.asarray(model.diffusion(tr, y))
    noise = np.sum(diffusion * dW[..., np.newaxis, :], axis=-1)
    return np.asarray(y + (-model.lam_array * h) * y + h * drift + noise)


def _checked(out: np.ndarray, node: int) -> np.ndarray:
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite state", node=node)
    return out


def pe_step(
    model: SdeModel, t: float, x: np.ndarray, h: float, dW: np.ndarray, node: int = 1
) -> np.ndarray:
    """
    One projected Euler step from state `x` at time `t`.

    `node` is the index reported when the result is not finite.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        y = project(x, h, model.gamma)
        return _checked(_advance(model, t, y, h, np.asarray(dW, dtype=np.float64)), node)


def em_step(
    model: SdeModel, t: float, x: np.ndarray, h: float, dW: np.ndarray, node: int = 1
) -> np.ndarray:
    """One plain Euler-Maruyama step; diverges for superlinear coefficients."""
    with np.errstate(over="ignore", invalid="ignore"):
        y = np.asarray(x, dtype=np.float64)
        return _checked(_advance(model, t, y, h, np.asarray(dW, dtype=np.float64)), node)


def check_admissible(model: SdeModel, config: SchemeConfig) -> float:
    """Apply the admissibility policy of `config` to `model` and return the step bound."""
    bound = admissible_step_bound(model, scheme_constants(model))
    if config.h > bound and config.admissibility is not Admissibility.OFF:
        message = (
            f"step size {config.h:g} exceeds the admissible bound {bound:.6g} of model "
            f"{model.name!r}"
        )
        if config.admissibility is Admissibility.STRICT:
            raise AdmissibilityError(message)
        logger.warning(message)
    return bound


def _coarsening(path: BrownianPath, h: float, t0: float) -> tuple[int, int]:
    factor = on_grid(h, path.h, what=f"step size {h}")
    if factor < 1 or factor & (factor - 1):
        raise ConfigError(
            f"step size {h} must be the path step {path.h:g} times a power of two"
        )
    start = path.grid.index_of(t0)
    if start % factor:
        raise ConfigError(f"start time {t0} is not a node of the step-{h:g} grid")
    return factor, start // factor


def _noise(path: BrownianPath, h: float, t0: float, steps: int) -> np.ndarray:
    factor, start = _coarsening(path, h, t0)
    return increments(path, factor, start, steps)


def run(
    model: SdeModel,
    kind: SchemeKind,
    h: float,
    t0: float,
    x0: np.ndarray,
    dW: np.ndarray,
    stream_ids: Optional[Sequence[int]] = None,
    record: bool = True,
) -> np.ndarray:
    """
    Iterate the scheme over a batch.

    `x0` has shape `(batch, d)` and `dW` shape `(batch, steps, m)`. Returns the
    states with shape `(steps + 1, batch, d)`, or the terminal states with shape
    `(batch, d)` when `record` is false.
    """
    x = np.array(x0, dtype=np.float64)
    steps = dW.shape[1]
    states = np.empty((steps + 1,) + x.shape) if record else None
    if states is not None:
        states[0] = x
    projected = SchemeKind(kind) is SchemeKind.PROJECTED_EULER
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(steps):
            y = project(x, h, model.gamma) if projected else x
            x = _advance(model, t0 + j * h, y, h, dW[:, j])
            if not np.all(np.isfinite(x)):
                bad = int(np.flatnonzero(~np.all(np.isfinite(x), axis=-1))[0])
                stream = stream_ids[bad] if stream_ids is not None else None
                raise BlowUpError("non-finite state", node=j + 1, stream_id=stream, h=h)
            if states is not None:
                states[j + 1] = x
    return states if states is not None else x


def integrate(
    model: SdeModel,
    config: SchemeConfig,
    path: BrownianPath,
    t0: float,
    steps: int,
    xi: Union[np.ndarray, Sequence[float], float],
    check: bool = True,
) -> Trajectory:
    """
    Integrate one path from `xi` at `t0` for `steps` steps of size `config.h`.

    `t0` must be a node of the path grid and `config.h` the path step times a
    power of two. With `check` the admissibility policy is applied first.
    """
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    if check:
        check_admissible(model, config)
    x0 = np.broadcast_to(np.asarray(xi, dtype=np.float64), (model.dim,))
    dW = _noise(path, config.h, t0, steps)
    states = run(
        model, config.kind, config.h, t0, x0[np.newaxis], dW[np.newaxis], [path.stream_id]
    )
    return Trajectory(
        t0=t0,
        h=config.h,
        states=states[:, 0],
        model_id=model.name,
        seed=path.seed,
        stream_id=path.stream_id,
    )


def integrate_batch(
    model: SdeModel,
    config: SchemeConfig,
    paths: Sequence[BrownianPath],
    t0: float,
    steps: int,
    xi: Union[np.ndarray, Sequence[float], float],
    record: bool = True,
    check: bool = False,
) -> np.ndarray:
    """
    Integrate several paths at once; row `b` matches `integrate` on `paths[b]` bit for bit.

    `xi` is either one initial state or one state per path.
    """
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    if check:
        check_admissible(model, config)
    x0 = np.broadcast_to(np.asarray(xi, dtype=np.float64), (len(paths), model.dim))
    if paths:
        dW = np.stack([_noise(p, config.h, t0, steps) for p in paths])
    else:
        dW = np.zeros((0, steps, model.noise_dim))
    return run(
        model,
        config.kind,
        config.h,
        t0,
        x0,
        dW,
        [p.stream_id for p in paths],
        record=record,
    )
