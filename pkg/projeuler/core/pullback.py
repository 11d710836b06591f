"""
Pull-back approximation of random periodic solutions.

All integrations of one experiment read their noise from a single path anchored
at the earliest start time, so "the same realisation" holds literally across
pull-back depths and initial values.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from projeuler.core.inspection import RunStatistics, Stopwatch
from projeuler.core.model import SdeModel
from projeuler.core.parallel import map_streams
from projeuler.core.scheme import SchemeConfig, check_admissible, integrate, integrate_batch
from projeuler.core.wiener import GridSpec, generate, on_grid, shift

logger = logging.getLogger(__name__)

StateLike = Union[np.ndarray, Sequence[float], float]


@dataclasses.dataclass(eq=False)
class PullbackResult:
    """
    Window states for each pull-back depth `k` (start time `-k * period`).

    `cauchy_gaps[i]` is the sup-norm gap over the window between depths `i + 1`
    and `i + 2`.
    """

    k_used: int
    window_times: np.ndarray
    terminal_states: Dict[int, np.ndarray]
    cauchy_gaps: np.ndarray
    converged: bool
    tolerance: float

    @property
    def solution(self) -> np.ndarray:
        """States of the deepest pull-back, the best available approximation."""
        return self.terminal_states[self.k_used]


@dataclasses.dataclass(eq=False)
class GapSeries:
    """Squared gaps per node, single path or Monte Carlo mean with its standard error."""

    times: np.ndarray
    gaps_sq: np.ndarray
    sem: np.ndarray
    m_paths: int = 1
    # (X_{t - D}(w), X_t(theta_{-D} w)) on the window, periodicity runs only
    overlay: Optional[Tuple[np.ndarray, np.ndarray]] = None
    statistics: RunStatistics = dataclasses.field(default_factory=RunStatistics)

    @property
    def terminal(self) -> float:
        return float(self.gaps_sq[-1])


def _sup_gap(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.sum((a - b) ** 2, axis=-1))))


def pullback_solve(
    model: SdeModel,
    config: SchemeConfig,
    seed: int,
    xi: StateLike,
    window: Tuple[float, float],
    k_max: int,
    tol: float,
    stream_id: int = 0,
) -> PullbackResult:
    """
    Integrate from `-k * period`, `k = 1 .. k_max`, until the window states settle.

    Stops at the first depth whose sup gap to the previous depth is at most `tol`.
    Reaching `k_max` without that is reported through `converged=False`.
    """
    t_lo, t_hi = window
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    if not -model.period <= t_lo <= t_hi:
        raise ValueError(
            f"window [{t_lo}, {t_hi}] must start no earlier than -period = {-model.period}"
        )
    h = config.h
    deepest = -k_max * model.period
    grid = GridSpec.covering(deepest, t_hi, h)
    path = generate(grid, model.noise_dim, seed, stream_id)
    lo, hi = grid.index_of(t_lo), grid.index_of(t_hi)
    window_times = grid.t0 + np.arange(lo, hi + 1) * h
    check_admissible(model, config)

    states: Dict[int, np.ndarray] = {}
    gaps = []
    converged = False
    k = 0
    for k in range(1, k_max + 1):
        start = grid.index_of(-k * model.period)
        trajectory = integrate(model, config, path, grid.time(start), hi - start, xi, check=False)
        states[k] = trajectory.states[lo - start :]
        if k > 1:
            gaps.append(_sup_gap(states[k], states[k - 1]))
            if gaps[-1] <= tol:
                converged = True
                break
    if not converged:
        logger.warning(
            f"pull-back did not settle below {tol:g} within {k_max} periods"
            + (f" (last gap {gaps[-1]:.3g})" if gaps else "")
        )
    return PullbackResult(
        k_used=k,
        window_times=window_times,
        terminal_states=states,
        cauchy_gaps=np.asarray(gaps, dtype=np.float64),
        converged=converged,
        tolerance=tol,
    )


class _ContractionJob:
    """Squared gaps between two initial values driven by the same noise, per stream."""

    def __init__(
        self,
        model: SdeModel,
        config: SchemeConfig,
        seed: int,
        grid: GridSpec,
        steps: int,
        xi: np.ndarray,
        eta: np.ndarray,
    ) -> None:
        self.model = model
        self.config = config
        self.seed = seed
        self.grid = grid
        self.steps = steps
        self.xi = xi
        self.eta = eta

    def __call__(self, stream_ids: Sequence[int]) -> Tuple[np.ndarray, RunStatistics]:
        stats = RunStatistics()
        with Stopwatch(stats, len(stream_ids), 2 * self.steps * len(stream_ids)):
            paths = [generate(self.grid, self.model.noise_dim, self.seed, s) for s in stream_ids]
            x = integrate_batch(self.model, self.config, paths, self.grid.t0, self.steps, self.xi)
            y = integrate_batch(self.model, self.config, paths, self.grid.t0, self.steps, self.eta)
            gaps_sq = np.sum((x - y) ** 2, axis=-1).T
        return gaps_sq, stats


def stream_ids(streams: Union[int, Sequence[int]]) -> Sequence[int]:
    """Explicit stream ids, or `0 .. M-1` for a count `M`."""
    ids = range(streams) if isinstance(streams, int) else streams
    if len(ids) < 1:
        raise ValueError("at least one stream is required")
    return ids


def monte_carlo_mean(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over the first axis."""
    m = samples.shape[0]
    mean = samples.mean(axis=0)
    if m < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(m)


def contraction_gap(
    model: SdeModel,
    config: SchemeConfig,
    streams: Union[int, Sequence[int]],
    seed: int,
    xi: StateLike,
    eta: StateLike,
    t0: float,
    T: float,
    num_jobs: Optional[int] = None,
    progress: bool = False,
) -> GapSeries:
    """
    Monte Carlo mean of `|X_t(xi) - X_t(eta)|^2` on the nodes of `[t0, T]`.

    `streams` is either a number of streams `M` (ids `0 .. M-1`) or explicit ids.
    """
    ids = stream_ids(streams)
    grid = GridSpec.covering(t0, T, config.h)
    steps = grid.index_of(T)
    check_admissible(model, config)
    job = _ContractionJob(
        model,
        config,
        seed,
        grid,
        steps,
        np.broadcast_to(np.asarray(xi, dtype=np.float64), (model.dim,)),
        np.broadcast_to(np.asarray(eta, dtype=np.float64), (model.dim,)),
    )
    results, stats = map_streams(job, ids, num_jobs=num_jobs, progress=progress)
    logger.info(f"contraction run: {stats.get_human_readable_values()}")
    mean, sem = monte_carlo_mean(np.concatenate(results, axis=0))
    return GapSeries(
        times=grid.t0 + np.arange(steps + 1) * config.h,
        gaps_sq=mean,
        sem=sem,
        m_paths=len(ids),
        statistics=stats,
    )


def periodicity_series(
    model: SdeModel,
    config: SchemeConfig,
    seed: int,
    xi: StateLike,
    t0: float,
    observe: Tuple[float, float],
    shift_periods: int,
    stream_id: int = 0,
) -> GapSeries:
    """
    Squared gaps `|X_{t - D}(w) - X_t(theta_{-D} w)|^2` for `t` in `[a + D, b + D]`.

    `D = shift_periods * period`; both trajectories start from `xi` at `t0`, the
    second one on the Wiener-shifted realisation.
    """
    a, b = observe
    if not a <= b:
        raise ValueError(f"empty observation window [{a}, {b}]")
    h = config.h
    delta = shift_periods * model.period
    delta_nodes = on_grid(delta, h, what=f"shift {delta}")
    if min(a, a + delta) < t0:
        raise ValueError(f"observation window [{a}, {b}] shifted by {delta} starts before {t0}")
    t_end = max(b, b + delta)
    grid = GridSpec.covering(t0, t_end, h)
    steps = grid.index_of(t_end)
    path = generate(grid, model.noise_dim, seed, stream_id)
    shifted = shift(path, -delta_nodes)
    check_admissible(model, config)
    x = integrate(model, config, path, t0, steps, xi, check=False).states
    y = integrate(model, config, shifted, t0, steps, xi, check=False).states
    lo, hi = grid.index_of(a + delta), grid.index_of(b + delta)
    nodes = np.arange(lo, hi + 1)
    gaps_sq = np.sum((x[nodes - delta_nodes] - y[nodes]) ** 2, axis=-1)
    return GapSeries(
        times=grid.t0 + nodes * h,
        gaps_sq=gaps_sq,
        sem=np.zeros_like(gaps_sq),
        overlay=(x[nodes - delta_nodes], y[nodes]),
    )


def periodicity_check(
    model: SdeModel,
    config: SchemeConfig,
    seed: int,
    xi: StateLike,
    t0: float,
    observe: Tuple[float, float],
    shift_periods: int,
    stream_id: int = 0,
) -> float:
    """Sup-norm distance between the trajectory and its Wiener-shifted copy on the window."""
    series = periodicity_series(model, config, seed, xi, t0, observe, shift_periods, stream_id)
    return float(np.sqrt(np.max(series.gaps_sq)))
