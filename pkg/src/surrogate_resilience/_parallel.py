"""Order-preserving parallel map over independent work items."""

import os
from concurrent.futures import ProcessPoolExecutor

THREADS_ENV = "RESILIENCE_THREADS"


def max_workers():
    """Worker cap from ``RESILIENCE_THREADS``; all CPUs when unset."""
    available = os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return available
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def pmap(fn, items, workers=None):
    """``[fn(x) for x in items]``, possibly in worker processes.

    Results come back in input order, so aggregation is independent of
    scheduling. ``fn`` must be picklable (module-level) when ``workers > 1``.
    """
    items = list(items)
    workers = max_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
