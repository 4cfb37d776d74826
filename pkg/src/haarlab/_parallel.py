"""Trial-level thread pool with index-ordered results."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar

T = TypeVar("T")

_CHUNK = 64


def map_trials(fn: Callable[[int], T], count: int, threads: int = 1) -> List[T]:
    """``[fn(0), ..., fn(count - 1)]`` computed on up to ``threads`` workers.

    The output order is the trial order regardless of scheduling, so any
    reduction over it is reproducible.
    """
    if count <= 0:
        return []
    if threads <= 1 or count == 1:
        return [fn(i) for i in range(count)]

    def run_chunk(start):
        return [fn(i) for i in range(start, min(start + _CHUNK, count))]

    out: List[T] = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for chunk in pool.map(run_chunk, range(0, count, _CHUNK)):
            out.extend(chunk)
    return out
