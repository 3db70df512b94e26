"""Chunked worker pool shared by the enumeration and sampling engines.

Work is always split into chunks whose boundaries depend only on the problem
size and the configured chunk size, never on the worker count, and chunk
results come back in chunk order. Any reduction over them is therefore
identical for one worker or many.
"""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from redlab.core.config import settings

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(threads: int | None = None) -> int:
    if threads is None:
        threads = settings.threads
    if threads is None:
        threads = os.cpu_count() or 1
    return max(int(threads), 1)


def chunk_ranges(total: int, chunk_size: int) -> list[tuple[int, int]]:
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    return [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def parallel_map(fn: Callable[[T], R], items: Iterable[T], *, threads: int | None = None) -> list[R]:
    work = list(items)
    workers = min(resolve_workers(threads), max(len(work), 1))
    if workers == 1:
        return [fn(item) for item in work]

    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="redlab") as pool:
        return list(pool.map(fn, work))
