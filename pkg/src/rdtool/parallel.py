from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def max_workers() -> int:
    """Worker cap from RDTOOL_THREADS (default 1, i.e. sequential)."""
    raw = os.environ.get("RDTOOL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map preserving input order; results do not depend on the worker count."""
    items = list(items)
    n = min(max_workers(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
