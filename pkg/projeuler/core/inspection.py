from __future__ import annotations

import dataclasses
import time
from typing import Any, Dict


@dataclasses.dataclass
class RunStatistics:
    """Counters of one Monte Carlo run, merged across worker processes with `+`."""

    streams: int = 0
    steps: int = 0
    batches: int = 0
    cumulative_time_ns: int = 0

    def get_human_readable_values(self) -> Dict[str, Any]:
        return {
            "streams": self.streams,
            "steps": self.steps,
            "batches": self.batches,
            "cumulative_time": self.cumulative_time_ns / 10**9,
        }

    def __add__(self, other: RunStatistics) -> RunStatistics:
        return RunStatistics(
            self.streams + other.streams,
            self.steps + other.steps,
            self.batches + other.batches,
            self.cumulative_time_ns + other.cumulative_time_ns,
        )

    def reset(self) -> RunStatistics:
        self.streams = 0
        self.steps = 0
        self.batches = 0
        self.cumulative_time_ns = 0
        return self


class Stopwatch:
    """Records one batch into a `RunStatistics`; used as a context manager."""

    def __init__(self, stats: RunStatistics, streams: int, steps: int) -> None:
        self.stats = stats
        self.streams = streams
        self.steps = steps
        self._start = 0

    def __enter__(self) -> Stopwatch:
        self._start = time.perf_counter_ns()
        return self

    def __exit__(self, exc_type, exc_value, traceback) -> None:  # type: ignore
        if exc_type is None:
            self.stats.streams += self.streams
            self.stats.steps += self.steps
            self.stats.batches += 1
        self.stats.cumulative_time_ns += time.perf_counter_ns() - self._start
