from __future__ import annotations

import functools
import logging
import multiprocessing
import multiprocessing.pool
import os
import signal
from typing import Any, Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

import tqdm

from projeuler.core.inspection import RunStatistics

logger = logging.getLogger(__name__)

# Streams per task. Fixed so that the batch composition, and therefore every
# floating point result, does not depend on the number of workers.
STREAM_BATCH = 25
THREADS_ENV = "RPS_THREADS"

StreamJob = Callable[[Sequence[int]], Tuple[Any, RunStatistics]]

PARALLEL_JOB: StreamJob


def resolve_num_jobs(num_jobs: Optional[int] = None) -> int:
    """
    Number of worker processes.

    `None` reads `RPS_THREADS` (unset means 1), and 0 means one worker per CPU.
    """
    if num_jobs is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        try:
            num_jobs = int(raw) if raw else 1
        except ValueError:
            logger.warning(f"Ignoring invalid {THREADS_ENV}={raw!r}")
            num_jobs = 1
    if num_jobs < 0:
        raise ValueError(f"number of jobs must be nonnegative, got {num_jobs}")
    if num_jobs == 0:
        num_jobs = os.cpu_count() or 1
    return num_jobs


def stream_batches(stream_ids: Sequence[int], size: int = STREAM_BATCH) -> List[Sequence[int]]:
    """
    >>> stream_batches(range(5), 2)
    [range(0, 2), range(2, 4), range(4, 5)]
    """
    return [stream_ids[i : i + size] for i in range(0, len(stream_ids), size)]


def _init_worker(job: StreamJob) -> None:
    signal.signal(signal.SIGINT, signal.SIG_IGN)
    global PARALLEL_JOB
    PARALLEL_JOB = job


def _worker(stream_ids: Sequence[int]) -> Tuple[Any, int, RunStatistics]:
    global PARALLEL_JOB
    try:
        result, stats = PARALLEL_JOB(stream_ids)
    except Exception as e:
        logger.error(f"worker {os.getpid()} failed on streams {stream_ids!r}: {e}")
        raise e
    return result, os.getpid(), stats


class Parallel:
    """
    Fans batches of Monte Carlo streams out to worker processes.

    Results come back in submission order, so reductions over streams happen in a
    fixed order whatever the number of workers. Use it as a context manager:

    with Parallel(job, num_jobs=4) as pjob:
        for result in pjob.imap_apply(stream_batches(range(200))):
            ...

    With a single job the batches run in the calling process.
    """

    def __init__(
        self, job: StreamJob, num_jobs: Optional[int] = None, progress: bool = False
    ) -> None:
        """
        Args:
            job (StreamJob): Callable taking a batch of stream ids and returning the
                batch result together with its `RunStatistics`. With several
                workers the job is handed to each worker once, at start-up.
            num_jobs (int | None, optional): Number of worker processes, resolved by
                `resolve_num_jobs`. Defaults to None.
            progress (bool, optional): Show a progress bar over batches. Defaults to False.
        """
        self.job = job
        self.num_jobs = resolve_num_jobs(num_jobs)
        self.progress = progress

        self._pool: Optional[multiprocessing.pool.Pool] = None
        self._pid_stats: Optional[dict[int, RunStatistics]] = None

    def __enter__(self) -> Parallel:
        if self.num_jobs > 1:
            self._pool = multiprocessing.Pool(
                processes=self.num_jobs,
                initializer=_init_worker,
                initargs=(self.job,),
            )
        self._pid_stats = dict()
        return self

    def _local(
        self, batches: Iterable[Sequence[int]]
    ) -> Iterator[Tuple[Any, int, RunStatistics]]:
        pid = os.getpid()
        for batch in batches:
            result, stats = self.job(batch)
            yield result, pid, stats

    def imap_apply(self, batches: Sequence[Sequence[int]]) -> Iterator[Any]:
        """
        Apply the job to each batch and yield the results in order.

        Raises:
            RuntimeError: If called outside of a 'with' statement.
            Exception: Any exception raised by the job, for example `BlowUpError`.
        """
        if self._pid_stats is None:
            raise RuntimeError(
                "Parallel instance not properly initialized. Use within a 'with' statement."
            )
        if self._pool is not None:
            outputs: Iterator[Tuple[Any, int, RunStatistics]] = self._pool.imap(_worker, batches)
        else:
            outputs = self._local(batches)
        pbar = tqdm.tqdm(total=len(batches), unit="batch", disable=not self.progress)
        try:
            for result, pid, stats in outputs:
                self._pid_stats[pid] = self._pid_stats.get(pid, RunStatistics()) + stats
                pbar.update(1)
                yield result
        except Exception:
            self.__exit__(None, None, None)
            raise
        finally:
            pbar.close()

    def __exit__(self, exc_type, exc_value, traceback) -> None:  # type: ignore
        if self._pool:
            self._pool.terminate()
            self._pool.join()
            self._pool = None

    @property
    def statistics_obj(self) -> RunStatistics:
        """Total statistics of the batches processed so far."""
        if self._pid_stats:
            return functools.reduce(lambda x, y: x + y, self._pid_stats.values())
        return RunStatistics()


def map_streams(
    job: StreamJob,
    stream_ids: Sequence[int],
    num_jobs: Optional[int] = None,
    progress: bool = False,
) -> Tuple[List[Any], RunStatistics]:
    """Run `job` over `stream_ids` in fixed batches; results are in stream order."""
    with Parallel(job, num_jobs=num_jobs, progress=progress) as pjob:
        results = list(pjob.imap_apply(stream_batches(stream_ids)))
        stats = pjob.statistics_obj
    return results, stats
