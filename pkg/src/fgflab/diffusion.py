"""Brownian motion of the metric ``e^{2h} dx^2`` on the circle, two ways.

``simulate_direct`` integrates the SDE of the generator
``(1/2) e^{-2h} (u'' - h' u')`` by Euler-Maruyama.  ``simulate_timechange``
runs a standard Brownian motion ``X``, carries the exponential weight
``exp(-M/2 - <M>/8)`` with ``M = h(X_t) - h(X_0) - (1/2) int h''(X)``, and
reads ``X`` off at the inverse of ``C_t = int e^{2h(X)}``.  Weighted
marginals of the second agree with the first.

``h, h', h''`` are evaluated term by term from the trigonometric series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import stats

from ._runtime import STREAM_BASE_SDE, STREAM_DIRECT_SDE, blocks, ordered_map, replicate_rng
from .fgf import FieldRealization, circle_trig_series


# ---------------------------------------------------------------------------
# trigonometric fields

@dataclass(frozen=True, eq=False)
class TrigField:
    """``h(x) = sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x)``, ``k = 0..K``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.a, dtype=float)
        b = np.ascontiguousarray(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be vectors of equal length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_field(cls, field: FieldRealization) -> "TrigField":
        if field.s <= 1.5:
            raise ValueError("the SDE needs a C^1 field (s > 3/2)")
        _, a, b = circle_trig_series(field)
        return cls(a, b)

    @classmethod
    def constant(cls, c: float) -> "TrigField":
        return cls(np.array([float(c)]), np.array([0.0]))

    @property
    def K(self) -> int:
        return self.a.size - 1

    def derivatives(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.arange(self.K + 1)
        w = 2.0 * np.pi * k
        arg = np.outer(x, w)
        c, s = np.cos(arg), np.sin(arg)
        h = c @ self.a + s @ self.b
        h1 = (-s * w) @ self.a + (c * w) @ self.b
        h2 = (-c * w * w) @ self.a + (-s * w * w) @ self.b
        return h, h1, h2

    def bounds(self) -> tuple[float, float, float]:
        """Upper bounds for ``sup|h|``, ``sup|h'|``, ``sup|h''|`` (absolute coefficient sums)."""
        amp = np.hypot(self.a, self.b)
        w = 2.0 * np.pi * np.arange(self.K + 1)
        return float(amp.sum()), float((w * amp).sum()), float((w * w * amp).sum())

    def density(self, n: int = 4096) -> tuple[np.ndarray, float]:
        """``e^{h}`` on a uniform grid and its normaliser ``Z = int e^h``."""
        x = np.arange(n) / n
        e = np.exp(self.derivatives(x)[0])
        return e, float(e.mean())

    def bin_masses(self, bins: int, sub: int = 64) -> np.ndarray:
        """Probabilities of ``bins`` equal arcs under ``e^{h} dx / Z``."""
        e, Z = self.density(bins * sub)
        return e.reshape(bins, sub).mean(axis=1) / (bins * Z)


@numba.njit(cache=True)
def _trig_eval(a, b, x):
    """``h, h', h''`` at ``x`` by the angle-addition recurrence."""
    w0 = 2.0 * math.pi
    c1 = math.cos(w0 * x)
    s1 = math.sin(w0 * x)
    ck, sk = 1.0, 0.0
    h = a[0]
    h1 = 0.0
    h2 = 0.0
    for k in range(1, a.size):
        ck, sk = ck * c1 - sk * s1, sk * c1 + ck * s1
        w = w0 * k
        h += a[k] * ck + b[k] * sk
        h1 += w * (b[k] * ck - a[k] * sk)
        h2 -= w * w * (a[k] * ck + b[k] * sk)
    return h, h1, h2


@numba.njit(cache=True)
def _direct_path(a, b, x, dt, steps, record_every, rng, out):
    sq = math.sqrt(dt)
    r = 0
    for i in range(steps):
        h, h1, _ = _trig_eval(a, b, x)
        e = math.exp(-h)
        x += -0.5 * e * e * h1 * dt + e * sq * rng.standard_normal()
        if (i + 1) % record_every == 0:
            out[r] = x
            r += 1


@numba.njit(cache=True)
def _timechange_path(a, b, x, dt, targets, max_steps, rng, out, logw):
    """Base Brownian motion with uniform steps ``dt``; output where ``C`` meets ``targets``.

    Returns the number of base steps taken, or -1 if ``max_steps`` ran out.
    """
    sq = math.sqrt(dt)
    nt = targets.size
    h, h1, h2 = _trig_eval(a, b, x)
    h_start = h
    C = 0.0
    lap = 0.0   # int h''
    qv = 0.0    # int h'^2
    lw_prev = 0.0
    j = 0
    i = 0
    while j < nt:
        if i >= max_steps:
            return -1
        dC = math.exp(2.0 * h) * dt
        lap += h2 * dt
        qv += h1 * h1 * dt
        x_new = x + sq * rng.standard_normal()
        i += 1
        hn, h1n, h2n = _trig_eval(a, b, x_new)
        lw = -0.5 * (hn - h_start - 0.5 * lap) - 0.125 * qv
        C_new = C + dC
        while j < nt and C_new >= targets[j]:
            th = (targets[j] - C) / dC
            out[j] = x + th * (x_new - x)
            logw[j] = lw_prev + th * (lw - lw_prev)
            j += 1
        x, h, h1, h2, C, lw_prev = x_new, hn, h1n, h2n, C_new, lw
    return i


# ---------------------------------------------------------------------------
# paths

@dataclass(frozen=True, eq=False)
class SdePath:
    """Lifted (unwrapped) positions of many paths at the recorded times.

    ``positions[p, j]`` is path ``p`` at ``times[j]``; ``log_weight`` is present
    for the time-change construction.
    """

    dt: float
    T: float
    times: np.ndarray
    lifted: np.ndarray
    log_weight: np.ndarray | None
    seed: int
    method: str

    @property
    def positions(self) -> np.ndarray:
        return np.mod(self.lifted, 1.0)

    @property
    def final(self) -> np.ndarray:
        return self.positions[:, -1]

    @property
    def final_weights(self) -> np.ndarray:
        if self.log_weight is None:
            return np.ones(self.lifted.shape[0])
        lw = self.log_weight[:, -1]
        return np.exp(lw - lw.max())

    @property
    def ess(self) -> float:
        w = self.final_weights
        return float(w.sum() ** 2 / np.sum(w * w))


class StepTooLarge(ValueError):
    pass


def _record_times(T, dt, records):
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * T:
        raise ValueError("T must be a multiple of dt")
    if steps % records:
        raise ValueError("records must divide the number of steps")
    return steps, steps // records


def _path_start(x0, rng, p):
    """Start of path ``p``; a uniform start is drawn first from the path's stream."""
    if isinstance(x0, str):
        if x0 != "uniform":
            raise ValueError("x0 must be a number, an array or 'uniform'")
        return float(rng.random())
    x = np.asarray(x0, dtype=float)
    return float(x) if x.ndim == 0 else float(x[p])


def max_drift(field: TrigField, n: int = 4096) -> float:
    h, h1, _ = field.derivatives(np.arange(n) / n)
    return float(np.max(0.5 * np.exp(-2 * h) * np.abs(h1)))


def simulate_direct(field: TrigField, x0, T: float, dt: float, n_paths: int, seed: int, *,
                    records: int = 1, bins: int = 64, threads: int | None = None,
                    block: int = 256) -> SdePath:
    """Euler-Maruyama paths of the perturbed Brownian motion.

    ``x0`` is a point, an array with one start per path, or ``"uniform"``.
    Path ``p`` draws from its own stream of ``(seed, p)``.
    """
    steps, every = _record_times(T, dt, records)
    if dt * max_drift(field) > 1.0 / bins:
        raise StepTooLarge(f"dt={dt} too large: drift step exceeds the bin width 1/{bins}")

    def run(chunk):
        start, count = chunk
        out = np.empty((count, records))
        for p in range(count):
            rng = replicate_rng(seed, start + p, STREAM_DIRECT_SDE)
            x = _path_start(x0, rng, start + p)
            _direct_path(field.a, field.b, x, dt, steps, every, rng, out[p])
        return out

    lifted = np.concatenate(ordered_map(run, blocks(n_paths, block), threads))
    times = T * np.arange(1, records + 1) / records
    return SdePath(dt, T, times, lifted, None, seed, "direct")


def simulate_timechange(field: TrigField, x0, T: float, dt: float, n_paths: int, seed: int, *,
                        records: int = 1, threads: int | None = None, block: int = 256) -> SdePath:
    """Weighted, time-changed standard Brownian motion.

    The base motion uses steps ``dt`` and runs until ``C`` passes the last
    record time; record times are located by linear interpolation of ``C``
    between steps, and positions and log-weights are interpolated alike.
    """
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    # C grows at least at rate e^{-2 sup|h|}
    max_steps = int(math.ceil(T * math.exp(2 * field.bounds()[0]) / dt)) + 2
    targets = T * np.arange(1, records + 1) / records

    def run(chunk):
        start, count = chunk
        out = np.empty((count, records))
        lw = np.empty((count, records))
        for p in range(count):
            rng = replicate_rng(seed, start + p, STREAM_BASE_SDE)
            x = _path_start(x0, rng, start + p)
            if _timechange_path(field.a, field.b, x, dt, targets, max_steps, rng, out[p], lw[p]) < 0:
                raise RuntimeError("time change ran past its step budget")
        return out, lw

    res = ordered_map(run, blocks(n_paths, block), threads)
    lifted = np.concatenate([r[0] for r in res])
    logw = np.concatenate([r[1] for r in res])
    if not np.all(np.isfinite(logw)):
        raise FloatingPointError("log-weight overflow")
    return SdePath(dt, T, targets, lifted, logw, seed, "timechange")


def clock(field: TrigField, x0: float, T: float, dt: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Base times and ``C_t`` along one base path (for monotonicity checks)."""
    hmax = field.bounds()[0]
    steps = int(math.ceil(T * math.exp(2 * hmax) / dt)) + 2
    z = replicate_rng(seed, 0, STREAM_BASE_SDE).standard_normal(steps)
    x = float(x0) + np.concatenate([[0.0], np.cumsum(math.sqrt(dt) * z)])
    h = field.derivatives(x[:-1])[0]
    C = np.concatenate([[0.0], np.cumsum(np.exp(2 * h) * dt)])
    return dt * np.arange(steps + 1), C


# ---------------------------------------------------------------------------
# statistics

@dataclass(frozen=True)
class OccupationHistogram:
    edges: np.ndarray
    mass: np.ndarray
    total: float

    @property
    def probabilities(self) -> np.ndarray:
        return self.mass / self.total


def occupation(paths: SdePath, bins: int = 64, burn_in: float = 0.0,
               weights: np.ndarray | None = None) -> OccupationHistogram:
    """Weighted histogram of recorded positions at times after ``burn_in * T``."""
    if not 0.0 <= burn_in < 1.0:
        raise ValueError("burn_in is a fraction of the horizon in [0, 1)")
    keep = paths.times > burn_in * paths.T - 1e-15
    if burn_in == 0.0:
        keep[:] = True
    pos = paths.positions[:, keep]
    if weights is None:
        if paths.log_weight is not None:
            lw = paths.log_weight[:, keep]
            w = np.exp(lw - lw.max())
        else:
            w = np.ones_like(pos)
    else:
        w = np.broadcast_to(np.asarray(weights, float).reshape(-1, 1), pos.shape)
    total = float(w.sum())
    if not total > 0:
        raise ValueError("zero effective weight")
    edges = np.linspace(0.0, 1.0, bins + 1)
    mass, _ = np.histogram(pos.ravel(), bins=edges, weights=w.ravel())
    return OccupationHistogram(edges, mass, total)


def weighted_ks(x: np.ndarray, y: np.ndarray, wx: np.ndarray | None = None,
                wy: np.ndarray | None = None) -> float:
    """Two-sample Kolmogorov-Smirnov distance between weighted samples."""
    wx = np.ones(x.size) if wx is None else np.asarray(wx, float)
    wy = np.ones(y.size) if wy is None else np.asarray(wy, float)
    pts = np.concatenate([x, y])
    order = np.argsort(pts, kind="stable")
    sw = np.concatenate([wx / wx.sum(), -wy / wy.sum()])[order]
    cdf = np.cumsum(sw)
    # evaluate only after the last of tied values
    last = np.r_[pts[order][1:] != pts[order][:-1], True]
    return float(np.max(np.abs(cdf[last])))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float

    @property
    def passed(self) -> bool:
        return self.p_value >= 0.01


def chi_square(counts: np.ndarray, probabilities: np.ndarray) -> ChiSquareResult:
    n = counts.sum()
    res = stats.chisquare(counts, n * probabilities / probabilities.sum())
    return ChiSquareResult(float(res.statistic), counts.size - 1, float(res.pvalue))


def mixing_time(field: TrigField, tol: float = 1e-4) -> float:
    """Horizon after which a start from the uniform law is within ``tol`` in ``L^2``.

    Uses the gap lower bound ``4 pi^2 e^{-2 sup|h|}`` and the decay rate of
    half the gap (the generator is half the Laplacian); the initial ``L^2``
    distance is at most ``e^{2 sup|h|}``.
    """
    S = field.bounds()[0] - abs(field.a[0])  # the constant mode does not affect mixing speed
    c0 = field.a[0]
    gap = 4 * math.pi ** 2 * math.exp(-2 * S) * math.exp(-2 * c0)
    return 2.0 * (2 * S + math.log(1.0 / tol)) / gap
