"""Order-preserving process pool map; results never depend on the worker count."""

import os
from concurrent.futures import ProcessPoolExecutor


def default_threads():
    raw = os.environ.get("CENSDR_THREADS", "").strip()
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def pmap(fn, items, threads=None):
    """``[fn(x) for x in items]``, spread over ``threads`` processes when > 1."""
    items = list(items)
    threads = default_threads() if threads is None else int(threads)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=1))
