"""Ordered evaluation of independent seeded trials."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")


def map_trials(fn: Callable[[int], T], trials: int, workers: int = 1) -> list[T]:
    """``[fn(0), ..., fn(trials - 1)]``, optionally on a thread pool.

    Each trial draws from its own stream, so the result does not depend on
    ``workers``.
    """
    if workers <= 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))
