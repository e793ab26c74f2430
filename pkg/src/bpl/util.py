"""Shared helpers: RNG coercion, subset iteration, atomic file writes."""

from __future__ import annotations

import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

import numpy as np


def as_rng(seed=None) -> np.random.Generator:
    """Coerce ``seed`` (None, int, or Generator) into a numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def iter_subsets(n: int, max_size: int):
    """Yield all subsets of range(n) of size <= max_size, ordered by size then lex."""
    for size in range(max_size + 1):
        yield from combinations(range(n), size)


def thread_map(fn, items, max_workers: int | None = None) -> list:
    """Map ``fn`` over ``items``, threaded when max_workers > 1.

    Results keep input order. Workloads here are numpy-dominated, so
    threads give real parallelism without pickling.
    """
    items = list(items)
    if not items or max_workers is None or max_workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


def atomic_write_text(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
