"""Deterministic fan-out of index ranges over worker processes."""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable

import numpy as np


def default_workers() -> int:
    return os.cpu_count() or 1


def _ranges(n: int, n_chunks: int) -> list[tuple[int, int]]:
    n_chunks = max(1, min(n_chunks, n))
    edges = np.linspace(0, n, n_chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_index_range(
    func: Callable[..., dict[str, np.ndarray]],
    n: int,
    args: tuple[Any, ...] = (),
    workers: int | None = None,
) -> dict[str, np.ndarray]:
    """Run ``func(start, stop, *args)`` over [0, n) and concatenate in index order.

    ``func`` must return a dict of equal-length arrays covering its slice.  The
    output depends only on ``func`` and ``n``: chunks are merged by position,
    never by completion order, so the worker count cannot change the result.
    """
    workers = default_workers() if workers is None else workers
    if workers <= 1 or n < 2:
        return func(0, n, *args)
    chunks = _ranges(n, 4 * workers)
    ctx = mp.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        futures = [pool.submit(func, a, b, *args) for a, b in chunks]
        parts = [f.result() for f in futures]
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
