"""Seeded Monte Carlo driver and its report type."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._runtime import blocks, ordered_map

Z99 = 2.576
MIN_REPLICATES = 100


@dataclass(frozen=True)
class MonteCarloReport:
    """Mean of one per-replicate statistic with its standard error."""

    estimator: str
    estimate: float
    se: float
    n: int
    seed: int
    reference: float | None = None
    wall_time: float = 0.0
    artifact: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a report needs at least one replicate")

    @property
    def ci99(self) -> tuple[float, float]:
        return (self.estimate - Z99 * self.se, self.estimate + Z99 * self.se)

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.estimate - target) <= k * self.se

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        d["ci99"] = list(self.ci99)
        if not timing:
            d.pop("wall_time")
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MonteCarloReport":
        d = {k: v for k, v in d.items() if k != "ci99"}
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "MonteCarloReport":
        return cls.from_dict(json.loads(text))


def summarize(name: str, samples: np.ndarray, seed: int, **kw) -> MonteCarloReport:
    x = np.asarray(samples, dtype=float)
    n = x.size
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MonteCarloReport(name, float(x.mean()), se, n, int(seed), **kw)


BlockEstimator = Callable[[int, int, int], np.ndarray]


def mc_samples(estimator: BlockEstimator, n: int, seed: int, *, block: int = 256,
               threads: int | None = None) -> np.ndarray:
    """Per-replicate rows of ``estimator(seed, start, count)`` for replicates ``0..n-1``.

    The estimator derives its randomness from ``(seed, replicate)`` only, so
    the rows do not depend on the block size or thread count.
    """
    def run(chunk):
        start, count = chunk
        try:
            out = np.asarray(estimator(seed, start, count), dtype=float)
        except Exception as exc:  # noqa: BLE001 - re-raised with the replicate range
            raise RuntimeError(f"estimator failed in replicates {start}..{start + count - 1}: {exc}") from exc
        return out.reshape(count, -1)

    return np.concatenate(ordered_map(run, blocks(n, block), threads), axis=0)


def mc_run(estimator: BlockEstimator, n: int, seed: int, names: Sequence[str] | None = None,
           *, block: int = 256, threads: int | None = None,
           references: Sequence[float | None] | None = None) -> list[MonteCarloReport]:
    """One report per statistic column of a block estimator."""
    if n < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates")
    t0 = time.perf_counter()
    rows = mc_samples(estimator, n, seed, block=block, threads=threads)
    wall = time.perf_counter() - t0
    names = list(names) if names is not None else [f"stat{i}" for i in range(rows.shape[1])]
    if len(names) != rows.shape[1]:
        raise ValueError("one name per statistic column")
    refs = list(references) if references is not None else [None] * len(names)
    return [summarize(nm, rows[:, i], seed, reference=ref, wall_time=wall)
            for i, (nm, ref) in enumerate(zip(names, refs))]
