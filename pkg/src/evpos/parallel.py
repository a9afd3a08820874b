"""Optional thread fan-out for grid sweeps.

The environment variable EVPOS_THREADS caps the worker count; the default
of 1 keeps everything sequential and deterministic.  Results are always
returned in submission order, so enabling threads never changes output.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_budget() -> int:
    raw = os.environ.get("EVPOS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn, items):
    items = list(items)
    budget = thread_budget()
    if budget <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(budget, len(items))) as pool:
        return list(pool.map(fn, items))
