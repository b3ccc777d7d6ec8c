"""Order-preserving process-pool map capped by the SLP_THREADS variable."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("SLP_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def pmap(fn, tasks, workers: int | None = None) -> list:
    """``[fn(t) for t in tasks]``, spread over processes; results keep task order."""
    tasks = list(tasks)
    n = min(worker_count(workers), len(tasks))
    if n <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))
