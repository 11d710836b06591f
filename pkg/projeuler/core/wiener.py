"""
Seeded two-sided Brownian paths on dyadic grids.

Increments are keyed on absolute grid indices: the increment over
`[i * h, (i + 1) * h)` of a path with base step `h` is a pure function of
`(seed, stream_id, i, h, noise_dim)`, for negative `i` as well. Paths started at
different times, or shifted, therefore share their noise wherever they overlap.

A grid whose start is not a multiple of its step sits on the shifted lattice
`(i + phase) * h`. Its increments are keyed on the same absolute index `i` plus a
tag of the fractional phase, so paths on one shifted lattice share their noise and
paths on different lattices draw independent noise.

The uniforms come from numpy's counter-based Philox generator: chunk `c` of
`CHUNK` increments is drawn from the counter `(c << 128) | (phase << 64)` under
the key `(seed, stream_id)`, then mapped to normals through the inverse normal CDF.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import struct
from typing import BinaryIO

import numpy as np
from scipy.special import ndtri

from projeuler.core.errors import PathBudgetError

logger = logging.getLogger(__name__)

CHUNK = 1024
DEFAULT_MAX_INCREMENTS = 2**25

_MASK64 = 2**64 - 1
_MASK128 = 2**128 - 1
_HEADER = struct.Struct("<4sHHddII")
_MAGIC = b"RPW1"
# Relative tolerance when deciding whether a time lies on a grid.
_GRID_RTOL = 1e-9
# Resolution of the lattice phase tag.
_PHASE_BITS = 32


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """A dyadic time grid `t0 + j * span / 2**levels`, `j = 0 .. 2**levels`."""

    t0: float
    span: float
    levels: int

    def __post_init__(self) -> None:
        if not self.span > 0:
            raise ValueError(f"span must be positive, got {self.span}")
        if not 0 <= self.levels <= 60:
            raise ValueError(f"levels must lie in [0, 60], got {self.levels}")

    @property
    def h(self) -> float:
        return self.span / 2**self.levels

    @property
    def steps(self) -> int:
        return 2**self.levels

    @property
    def t_end(self) -> float:
        return self.t0 + self.span

    def time(self, j: int) -> float:
        return self.t0 + j * self.h

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.steps + 1) * self.h

    def index_of(self, t: float) -> int:
        """Node index of time `t`; raises `ValueError` when `t` is not a node."""
        return on_grid(t - self.t0, self.h, what=f"time {t}")

    @classmethod
    def covering(cls, t_lo: float, t_hi: float, h: float) -> GridSpec:
        """
        Smallest dyadic grid of step `h` that starts at `t_lo` and reaches `t_hi`.

        >>> GridSpec.covering(-1.0, 2.0, 0.5)
        GridSpec(t0=-1.0, span=4.0, levels=3)
        """
        if not t_hi > t_lo:
            raise ValueError(f"empty window [{t_lo}, {t_hi}]")
        steps = math.ceil((t_hi - t_lo) / h * (1 - _GRID_RTOL))
        levels = max(0, (steps - 1).bit_length())
        return cls(t0=t_lo, span=h * 2**levels, levels=levels)


def on_grid(offset: float, h: float, what: str = "value") -> int:
    """Integer `n` with `offset == n * h` up to rounding; `ValueError` otherwise."""
    ratio = offset / h
    n = round(ratio)
    if abs(ratio - n) > _GRID_RTOL * max(1.0, abs(ratio)):
        raise ValueError(f"{what} is not a multiple of the step {h:g} (ratio {ratio!r})")
    return int(n)


def lattice_anchor(t0: float, h: float) -> tuple[int, int]:
    """
    Absolute index and phase tag of the first increment of a grid starting at `t0`.

    The phase tag is 0 when `t0` is a multiple of `h`.

    >>> lattice_anchor(-1.0, 0.25)
    (-4, 0)
    >>> lattice_anchor(0.375, 0.25)
    (1, 2147483648)
    """
    try:
        return on_grid(t0, h), 0
    except ValueError:
        pass
    ratio = t0 / h
    index = math.floor(ratio)
    phase = round((ratio - index) * 2**_PHASE_BITS)
    return index, min(max(phase, 1), 2**_PHASE_BITS - 1)


@dataclasses.dataclass(frozen=True, eq=False)
class BrownianPath:
    """
    One realisation of an `m`-dimensional Wiener process on `grid`.

    `values[j]` is `W(grid.time(j))` with `W(grid.t0) = 0`. `factor` is the number
    of generator steps per grid step, `origin` the absolute generator index of the
    first increment and `phase` the lattice tag from `lattice_anchor`; they are
    kept so that shifts can regenerate noise beyond the stored window.
    """

    grid: GridSpec
    noise_dim: int
    values: np.ndarray
    seed: int
    stream_id: int
    factor: int = 1
    origin: int = 0
    phase: int = 0

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def base_h(self) -> float:
        return self.grid.h / self.factor

    @property
    def terminal(self) -> np.ndarray:
        return np.asarray(self.values[-1])


def _key(seed: int, stream_id: int) -> int:
    return ((seed & _MASK64) << 64) | (stream_id & _MASK64)


def _chunk_normals(key: int, chunk: int, noise_dim: int, phase: int = 0) -> np.ndarray:
    # draws within a chunk advance only the lowest counter word
    bitgen = np.random.Philox(key=key, counter=((chunk & _MASK128) << 128) | (phase << 64))
    raw = bitgen.random_raw(CHUNK * noise_dim)
    # 53-bit uniforms on the open interval (0, 1)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return np.asarray(ndtri(u)).reshape(CHUNK, noise_dim)


def base_increments(
    seed: int,
    stream_id: int,
    start: int,
    count: int,
    noise_dim: int,
    base_h: float,
    phase: int = 0,
) -> np.ndarray:
    """Generator increments for absolute indices `start .. start + count - 1`."""
    if count <= 0:
        return np.zeros((0, noise_dim))
    key = _key(seed, stream_id)
    first, last = start // CHUNK, (start + count - 1) // CHUNK
    normals = np.concatenate(
        [_chunk_normals(key, c, noise_dim, phase) for c in range(first, last + 1)], axis=0
    )
    lo = start - first * CHUNK
    return np.asarray(math.sqrt(base_h) * normals[lo : lo + count])


def _prefix(increments: np.ndarray) -> np.ndarray:
    values = np.zeros((increments.shape[0] + 1, increments.shape[1]))
    # np.cumsum accumulates strictly left to right.
    np.cumsum(increments, axis=0, out=values[1:])
    return values


def _build(
    grid: GridSpec,
    noise_dim: int,
    seed: int,
    stream_id: int,
    factor: int,
    origin: int,
    phase: int,
    max_increments: int,
) -> BrownianPath:
    count = grid.steps * factor
    if count * noise_dim > max_increments:
        raise PathBudgetError(
            f"path needs {count * noise_dim} increments, budget is {max_increments}"
        )
    base = base_increments(seed, stream_id, origin, count, noise_dim, grid.h / factor, phase)
    values = _prefix(base)[::factor]
    return BrownianPath(grid, noise_dim, values, seed, stream_id, factor, origin, phase)


def generate(
    grid: GridSpec,
    noise_dim: int,
    seed: int,
    stream_id: int,
    max_increments: int = DEFAULT_MAX_INCREMENTS,
) -> BrownianPath:
    """
    Generate the path of stream `stream_id` on `grid`.

    The increments are anchored to the lattice of multiples of the grid step
    through which `grid.t0` passes, see `lattice_anchor`.
    """
    if noise_dim < 1:
        raise ValueError(f"noise_dim must be positive, got {noise_dim}")
    origin, phase = lattice_anchor(grid.t0, grid.h)
    return _build(grid, noise_dim, seed, stream_id, 1, origin, phase, max_increments)


def _check_factor(path: BrownianPath, factor: int) -> int:
    if factor < 1 or factor & (factor - 1):
        raise ValueError(f"factor must be a power of two, got {factor}")
    r = factor.bit_length() - 1
    if r > path.grid.levels:
        raise ValueError(f"factor {factor} exceeds the {path.grid.steps} steps of the path")
    return r


def coarsen(path: BrownianPath, factor: int) -> BrownianPath:
    """
    The same realisation on the grid whose step is `factor` times larger.

    Coarse node values are the fine node values at every `factor`-th node, so the
    terminal value is preserved exactly.
    """
    r = _check_factor(path, factor)
    if factor == 1:
        return path
    grid = GridSpec(path.grid.t0, path.grid.span, path.grid.levels - r)
    return BrownianPath(
        grid,
        path.noise_dim,
        path.values[::factor].copy(),
        path.seed,
        path.stream_id,
        path.factor * factor,
        path.origin,
        path.phase,
    )


def increment_at(path: BrownianPath, coarse_index: int, factor: int) -> np.ndarray:
    """Increment `coarse_index` of `coarsen(path, factor)` without building the coarse path."""
    _check_factor(path, factor)
    n = path.grid.steps // factor
    if not 0 <= coarse_index < n:
        raise IndexError(f"coarse index {coarse_index} outside [0, {n})")
    return np.asarray(
        path.values[(coarse_index + 1) * factor] - path.values[coarse_index * factor]
    )


def increments(path: BrownianPath, factor: int, start: int, count: int) -> np.ndarray:
    """Increments `start .. start + count - 1` of `coarsen(path, factor)` as one array."""
    _check_factor(path, factor)
    n = path.grid.steps // factor
    if start < 0 or count < 0 or start + count > n:
        raise IndexError(f"increments [{start}, {start + count}) outside [0, {n})")
    nodes = path.values[start * factor : (start + count) * factor + 1 : factor]
    return np.asarray(nodes[1:] - nodes[:-1])


def shift(
    path: BrownianPath,
    delta_nodes: int,
    extend: bool = True,
    max_increments: int = DEFAULT_MAX_INCREMENTS,
) -> BrownianPath:
    """
    The Wiener shift `W'(t) = W(t + delta) - W(delta)` with `delta = delta_nodes * h`.

    The shifted path lives on the same grid. Its noise is regenerated from the
    generator, so windows outside the stored one are available when `extend` is
    set; otherwise the shifted window must stay within the stored nodes.
    """
    if delta_nodes == 0:
        return path
    if not extend:
        raise IndexError(
            f"shift by {delta_nodes} nodes leaves the generated window of the path"
        )
    origin = path.origin + delta_nodes * path.factor
    return _build(
        path.grid,
        path.noise_dim,
        path.seed,
        path.stream_id,
        path.factor,
        origin,
        path.phase,
        max_increments,
    )


def dump_path(path: BrownianPath, fp: BinaryIO) -> None:
    """Write `path` as a 32-byte header followed by its node values (float64, little endian)."""
    if not (0 <= path.seed < 2**32 and 0 <= path.stream_id < 2**32):
        raise ValueError("path dumps store seed and stream_id as unsigned 32-bit integers")
    fp.write(
        _HEADER.pack(
            _MAGIC,
            path.grid.levels,
            path.noise_dim,
            path.grid.t0,
            path.grid.span,
            path.seed,
            path.stream_id,
        )
    )
    fp.write(np.ascontiguousarray(path.values, dtype="<f8").tobytes())


def load_path(fp: BinaryIO) -> BrownianPath:
    header = fp.read(_HEADER.size)
    if len(header) != _HEADER.size:
        raise ValueError("truncated path dump header")
    magic, levels, noise_dim, t0, span, seed, stream_id = _HEADER.unpack(header)
    if magic != _MAGIC:
        raise ValueError(f"not a path dump (magic {magic!r})")
    grid = GridSpec(t0, span, levels)
    data = np.frombuffer(fp.read(), dtype="<f8")
    expected = (grid.steps + 1) * noise_dim
    if data.size != expected:
        raise ValueError(f"path dump holds {data.size} values, expected {expected}")
    origin, phase = lattice_anchor(t0, grid.h)
    return BrownianPath(
        grid,
        noise_dim,
        data.reshape(grid.steps + 1, noise_dim).astype(np.float64),
        seed,
        stream_id,
        1,
        origin,
        phase,
    )
