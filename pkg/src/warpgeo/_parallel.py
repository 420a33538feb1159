"""Deterministic parallel map honouring ``WARPGEO_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("WARPGEO_THREADS", "")
    try:
        return max(1, int(raw)) if raw else default
    except ValueError:
        return default


def pmap(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, threaded when more than one worker is allowed.

    Results keep input order.  Threads pay off because the compiled shooting
    kernel releases the GIL.
    """
    items = list(items)
    w = worker_count() if workers is None else max(1, workers)
    if w == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(w, len(items))) as ex:
        return list(ex.map(fn, items))
