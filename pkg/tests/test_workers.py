"""Tests for the ordered worker pool."""

from tracelab.workers import parallel_map, resolve_jobs


class TestParallelMap:
    """Results keep input order for any worker count."""

    def test_order_is_stable(self):
        items = list(range(50))
        assert parallel_map(lambda x: x * x, items, jobs=1) == parallel_map(lambda x: x * x, items, jobs=4)

    def test_empty(self):
        assert parallel_map(str, [], jobs=3) == []


class TestResolveJobs:
    """--jobs translation."""

    def test_zero_means_all_cpus(self):
        assert resolve_jobs(0) >= 1
        assert resolve_jobs(None) == resolve_jobs(0)

    def test_explicit(self):
        assert resolve_jobs(3) == 3
