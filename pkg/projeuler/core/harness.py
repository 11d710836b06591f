"""
Strong convergence and moment experiments over Monte Carlo streams.

Every stream draws one fine Brownian path; the reference solution and each test
step size are integrated on that same path, coarsened, so the errors measure the
scheme and not the sampling of the noise.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from projeuler.core.inspection import RunStatistics, Stopwatch
from projeuler.core.model import SdeModel
from projeuler.core.parallel import map_streams
from projeuler.core.pullback import StateLike, monte_carlo_mean, stream_ids
from projeuler.core.scheme import (
    Admissibility,
    SchemeConfig,
    SchemeKind,
    check_admissible,
    integrate_batch,
)
from projeuler.core.wiener import GridSpec, generate

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ConvergencePoint:
    h: float
    mse: float
    sem: float

    @property
    def error(self) -> float:
        """Root mean-square error, the quantity the rate is fitted on."""
        return math.sqrt(self.mse)


@dataclasses.dataclass(eq=False)
class ConvergenceReport:
    """
    Mean-square terminal errors per step size and the fitted power law `e_h = C h^kappa`.

    `kappa`, `log_c` and `residual` are NaN when fewer than two step sizes have a
    positive error.
    """

    points: List[ConvergencePoint]
    kappa: float
    log_c: float
    residual: float
    m_paths: int
    ref_h: float
    statistics: RunStatistics = dataclasses.field(default_factory=RunStatistics)

    @property
    def hs(self) -> np.ndarray:
        return np.array([p.h for p in self.points])

    @property
    def mses(self) -> np.ndarray:
        return np.array([p.mse for p in self.points])

    @property
    def sems(self) -> np.ndarray:
        return np.array([p.sem for p in self.points])


@dataclasses.dataclass(eq=False)
class MomentTrace:
    times: np.ndarray
    mean_sq: np.ndarray
    max_over_run: float
    sem: Optional[np.ndarray] = None
    statistics: RunStatistics = dataclasses.field(default_factory=RunStatistics)


def fit_rate(points: Sequence[Tuple[float, float]]) -> Tuple[float, float, float]:
    """
    Least-squares fit of `log e = log C + kappa log h`.

    Returns `(kappa, log_c, residual)` with the residual measured as the 2-norm of
    the log-space residual vector.

    >>> kappa, log_c, residual = fit_rate([(0.25, 1.5), (1.0, 3.0)])
    >>> round(kappa, 12), round(log_c, 12), round(residual, 12)
    (0.5, 1.098612288668, 0.0)
    """
    if len(points) < 2:
        raise ValueError(f"at least two points are needed, got {len(points)}")
    h = np.array([p[0] for p in points], dtype=np.float64)
    e = np.array([p[1] for p in points], dtype=np.float64)
    if not (np.all(h > 0) and np.all(e > 0)):
        raise ValueError("step sizes and errors must be positive")
    if np.all(h == h[0]):
        raise ValueError("all step sizes are identical; the slope is undetermined")
    log_h, log_e = np.log(h), np.log(e)
    kappa, log_c = np.polyfit(log_h, log_e, 1)
    residual = float(np.linalg.norm(log_c + kappa * log_h - log_e))
    return float(kappa), float(log_c), residual


class _ConvergenceJob:
    """Squared terminal errors of each test step size against the reference, per stream."""

    def __init__(
        self,
        model: SdeModel,
        kind: SchemeKind,
        grid: GridSpec,
        hs: Sequence[float],
        seed: int,
        xi: np.ndarray,
    ) -> None:
        self.model = model
        self.grid = grid
        self.seed = seed
        self.xi = xi
        # Every integration here has been checked once by the caller.
        self.ref = SchemeConfig(grid.h, kind, Admissibility.OFF)
        self.tests = [SchemeConfig(h, kind, Admissibility.OFF) for h in hs]

    def __call__(self, stream_ids: Sequence[int]) -> Tuple[np.ndarray, RunStatistics]:
        stats = RunStatistics()
        span = self.grid.span
        steps = self.grid.steps + sum(round(span / c.h) for c in self.tests)
        with Stopwatch(stats, len(stream_ids), steps * len(stream_ids)):
            paths = [generate(self.grid, self.model.noise_dim, self.seed, s) for s in stream_ids]
            ref = integrate_batch(
                self.model, self.ref, paths, self.grid.t0, self.grid.steps, self.xi, record=False
            )
            errors = np.empty((len(stream_ids), len(self.tests)))
            for i, config in enumerate(self.tests):
                approx = integrate_batch(
                    self.model,
                    config,
                    paths,
                    self.grid.t0,
                    round(span / config.h),
                    self.xi,
                    record=False,
                )
                errors[:, i] = np.sum((ref - approx) ** 2, axis=-1)
        return errors, stats


def mse_convergence(
    model: SdeModel,
    t0: float,
    T: float,
    ref_levels: int,
    test_exponents: Sequence[int],
    m_paths: Union[int, Sequence[int]],
    seed: int,
    xi: StateLike,
    kind: Union[SchemeKind, str] = SchemeKind.PROJECTED_EULER,
    admissibility: Union[Admissibility, str] = Admissibility.WARN,
    num_jobs: Optional[int] = None,
    progress: bool = False,
) -> ConvergenceReport:
    """
    Mean-square error at `T` of the step sizes `(T - t0) * 2**-i`, `i` in `test_exponents`.

    The reference solution uses the same scheme with step `(T - t0) * 2**-ref_levels`.
    `m_paths` is a number of streams or the stream ids themselves.
    """
    span = T - t0
    if not span > 0:
        raise ValueError(f"empty interval [{t0}, {T}]")
    if not test_exponents:
        raise ValueError("no test step sizes given")
    for i in test_exponents:
        if not 0 <= i <= ref_levels:
            raise ValueError(
                f"test exponent {i} is not nested in the reference grid 2**-{ref_levels}"
            )
    ids = stream_ids(m_paths)
    grid = GridSpec(t0, span, ref_levels)
    exponents = sorted(set(test_exponents), reverse=True)
    hs = [span / 2**i for i in exponents]
    for h in [grid.h] + hs:
        check_admissible(model, SchemeConfig(h, kind, admissibility))

    job = _ConvergenceJob(
        model,
        SchemeKind(kind),
        grid,
        hs,
        seed,
        np.broadcast_to(np.asarray(xi, dtype=np.float64), (model.dim,)),
    )
    results, stats = map_streams(job, ids, num_jobs=num_jobs, progress=progress)
    logger.info(f"convergence run: {stats.get_human_readable_values()}")
    mean, sem = monte_carlo_mean(np.concatenate(results, axis=0))
    points = [ConvergencePoint(h, float(m), float(s)) for h, m, s in zip(hs, mean, sem)]

    positive = [(p.h, p.error) for p in points if p.mse > 0]
    if len({h for h, _ in positive}) >= 2:
        kappa, log_c, residual = fit_rate(positive)
    else:
        logger.warning("fewer than two step sizes with a positive error; no rate fitted")
        kappa = log_c = residual = math.nan
    return ConvergenceReport(points, kappa, log_c, residual, len(ids), grid.h, stats)


class _MomentJob:
    """Squared state norms at every node, per stream."""

    def __init__(
        self,
        model: SdeModel,
        config: SchemeConfig,
        grid: GridSpec,
        steps: int,
        seed: int,
        xi: np.ndarray,
    ) -> None:
        self.model = model
        self.config = config
        self.grid = grid
        self.steps = steps
        self.seed = seed
        self.xi = xi

    def __call__(self, stream_ids: Sequence[int]) -> Tuple[np.ndarray, RunStatistics]:
        stats = RunStatistics()
        with Stopwatch(stats, len(stream_ids), self.steps * len(stream_ids)):
            paths = [generate(self.grid, self.model.noise_dim, self.seed, s) for s in stream_ids]
            states = integrate_batch(
                self.model, self.config, paths, self.grid.t0, self.steps, self.xi
            )
            norms_sq = np.sum(states * states, axis=-1).T
        return norms_sq, stats


def moment_monitor(
    model: SdeModel,
    config: SchemeConfig,
    t0: float,
    steps: int,
    m_paths: Union[int, Sequence[int]],
    seed: int,
    xi: StateLike,
    num_jobs: Optional[int] = None,
    progress: bool = False,
) -> MomentTrace:
    """
    Monte Carlo second moment `E|X_j|^2` at every node of a run of `steps` steps.

    A non-finite state in any stream raises `BlowUpError`, which is the expected
    outcome of the Euler-Maruyama baseline on superlinear models.
    """
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    ids = stream_ids(m_paths)
    grid = GridSpec.covering(t0, t0 + steps * config.h, config.h)
    check_admissible(model, config)
    job = _MomentJob(
        model,
        config,
        grid,
        steps,
        seed,
        np.broadcast_to(np.asarray(xi, dtype=np.float64), (model.dim,)),
    )
    results, stats = map_streams(job, ids, num_jobs=num_jobs, progress=progress)
    logger.info(f"moment run: {stats.get_human_readable_values()}")
    mean, sem = monte_carlo_mean(np.concatenate(results, axis=0))
    return MomentTrace(
        times=t0 + np.arange(steps + 1) * config.h,
        mean_sq=mean,
        max_over_run=float(np.max(mean)),
        sem=sem,
        statistics=stats,
    )
