import pytest

from projeuler.core.inspection import RunStatistics, Stopwatch


def test_statistics_add():
    a = RunStatistics(streams=2, steps=20, batches=1, cumulative_time_ns=5)
    b = RunStatistics(streams=3, steps=30, batches=1, cumulative_time_ns=7)
    total = a + b
    assert total == RunStatistics(5, 50, 2, 12)
    assert a.streams == 2


def test_human_readable_values():
    values = RunStatistics(1, 2, 3, 1_500_000_000).get_human_readable_values()
    assert values == {"streams": 1, "steps": 2, "batches": 3, "cumulative_time": 1.5}


def test_reset():
    stats = RunStatistics(1, 2, 3, 4)
    assert stats.reset() is stats
    assert stats == RunStatistics()


def test_stopwatch_records_batches():
    stats = RunStatistics()
    with Stopwatch(stats, streams=25, steps=500):
        pass
    with Stopwatch(stats, streams=5, steps=100):
        pass
    assert (stats.streams, stats.steps, stats.batches) == (30, 600, 2)
    assert stats.cumulative_time_ns >= 0


def test_stopwatch_skips_failed_batches():
    stats = RunStatistics()
    with pytest.raises(ArithmeticError):
        with Stopwatch(stats, streams=25, steps=500):
            raise ArithmeticError
    assert (stats.streams, stats.steps, stats.batches) == (0, 0, 0)
