"""Order-preserving trial execution over a process pool."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")

THREADS_ENV = "GPRLAB_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def map_trials(fn: Callable[[int], T], trials: Iterable[int], threads: int | None = None) -> list[T]:
    """``[fn(t) for t in trials]``, optionally in worker processes.

    Results come back in trial order whatever the worker count, so any
    reduction over them is independent of ``threads``. ``fn`` must pickle
    (a module-level function or a ``functools.partial`` of one).
    """
    trials = list(trials)
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(trials) <= 1:
        return [fn(t) for t in trials]
    workers = min(threads, len(trials))
    chunk = max(1, math.ceil(len(trials) / (4 * workers)))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, trials, chunksize=chunk))
