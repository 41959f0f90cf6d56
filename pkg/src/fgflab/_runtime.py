"""Seeding and ordered parallel execution shared by the Monte Carlo drivers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "FGFLAB_THREADS"

# stream identifiers keep independent uses of one master seed apart
STREAM_FIELD = 0
STREAM_DIRECT_SDE = 1
STREAM_BASE_SDE = 2
STREAM_AUX = 3


def replicate_rng(seed: int, replicate: int, stream: int = STREAM_FIELD) -> np.random.Generator:
    """Generator for replicate ``replicate`` of ``stream`` under master ``seed``.

    Streams are derived from ``(seed, stream, replicate)`` only, so results do
    not depend on the order or grouping in which replicates are produced.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(replicate)))
    return np.random.Generator(np.random.PCG64(ss))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on up to ``threads`` worker threads."""
    items = list(items)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def blocks(total: int, size: int) -> list[tuple[int, int]]:
    """Fixed ``(start, count)`` chunks; independent of the thread count."""
    return [(a, min(size, total - a)) for a in range(0, total, size)]


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    import subprocess
    from pathlib import Path

    from . import __version__
    root = Path(__file__).resolve().parents[2]
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"], cwd=root,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__
