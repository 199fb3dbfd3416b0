"""Ordered worker pool used for per-sample parallelism."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

logger = logging.getLogger("tracelab.workers")

T = TypeVar("T")
R = TypeVar("R")


def resolve_jobs(jobs: int | None) -> int:
    """Translate a ``--jobs`` value into a worker count (0/None = all CPUs)."""
    if jobs is None or jobs <= 0:
        return os.cpu_count() or 1
    return jobs


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int | None = 1) -> list[R]:
    """Apply ``fn`` to every item, returning results in input order.

    Each task must be independent; the result list is identical for any
    worker count, including the inline ``jobs == 1`` path.
    """
    work = list(items)
    workers = min(resolve_jobs(jobs), max(len(work), 1))
    if workers == 1:
        return [fn(item) for item in work]
    logger.debug("Running %d tasks on %d threads", len(work), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, work))
