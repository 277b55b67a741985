"""Thread-pool helpers with input-ordered results."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(n_jobs: int | None = None) -> int:
    """LAB_THREADS, when set, overrides the requested worker count."""
    env = os.environ.get("LAB_THREADS")
    if env:
        n_jobs = int(env)
    return max(1, int(n_jobs or 1))


def ordered_map(fn, items, n_jobs: int | None = None) -> list:
    items = list(items)
    n = worker_count(n_jobs)
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
