"""Thread-cap plumbing for sweep drivers.

``FOCAL_CALIB_THREADS`` caps the worker count (default 1, i.e. fully
sequential).  Results are always reduced in input order, so parallel runs
are bit-identical to sequential ones.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "FOCAL_CALIB_THREADS"


def thread_limit() -> int:
    raw = os.environ.get(ENV_VAR, "")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def map_ordered(fn, items):
    """``map`` preserving input order, threaded when the cap allows."""
    items = list(items)
    limit = thread_limit()
    if limit <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(limit, len(items))) as pool:
        return list(pool.map(fn, items))
