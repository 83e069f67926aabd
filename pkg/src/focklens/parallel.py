"""Deterministic worker-pool helper.

Jobs are pure functions of their arguments; results come back in job order
regardless of scheduling, so outputs are independent of the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, jobs, workers: int = 1) -> list:
    """map(fn, jobs) with optional process parallelism, order-preserving."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))
