"""
Worker pool for data-parallel stages (images, pairs).

Results always come back in input order so reductions are deterministic.
workers=1 runs inline in the calling process; workers=0 means one worker
per physical core.
"""
from __future__ import annotations

import multiprocessing
import os
from typing import Any, Callable, Iterable, Sequence, TypeVar

import psutil

from wildreid.utils.logger import get_logger

log = get_logger("pool")

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: int) -> int:
    if workers and workers > 0:
        return int(workers)
    physical = psutil.cpu_count(logical=False) or psutil.cpu_count(logical=True) or 1
    return max(1, int(physical))


class WorkerPool:
    def __init__(
        self,
        workers: int = 1,
        initializer: Callable[..., None] | None = None,
        initargs: Sequence[Any] = (),
        chunksize: int = 16,
    ) -> None:
        self.workers = resolve_workers(workers)
        self.initializer = initializer
        self.initargs = tuple(initargs)
        self.chunksize = max(1, int(chunksize))

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        if not items:
            return []
        n = min(self.workers, len(items))
        if n <= 1:
            if self.initializer is not None:
                self.initializer(*self.initargs)
            return [fn(x) for x in items]

        log.info("Pool: %d workers over %d items (chunksize=%d)", n, len(items), self.chunksize)
        ctx = multiprocessing.get_context("spawn" if os.name == "nt" else "fork")
        with ctx.Pool(processes=n, initializer=self.initializer, initargs=self.initargs) as pool:
            results = list(pool.imap(fn, items, chunksize=self.chunksize))
            self._log_rss(pool)
        return results

    @staticmethod
    def _log_rss(pool: Any) -> None:
        total = 0
        for proc in getattr(pool, "_pool", []):
            try:
                total += psutil.Process(proc.pid).memory_info().rss
            except (psutil.NoSuchProcess, psutil.AccessDenied):
                continue
        if total:
            log.debug("Pool worker RSS: %.1f MB", total / (1024 * 1024))
