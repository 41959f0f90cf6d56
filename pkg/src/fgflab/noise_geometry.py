"""Noise distance, covering numbers and the Dudley entropy bound.

The noise distance of a field with kernel ``G`` is
``rho(x, y) = (G(x,x) + G(y,y) - 2 G(x,y))^{1/2}``, the L^2 distance between
``h(x)`` and ``h(y)``.  On homogeneous models it is a function of the geodesic
distance alone, which the radial table below exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .green_kernels import (
    CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL, KernelQuery, has_closed_form, kernel_radial,
)
from .spectral_basis import CIRCLE, as_points, geodesic_distance


@dataclass(frozen=True, eq=False)
class NoiseMetric:
    """Noise distance for a kernel query, evaluated along ``route``.

    ``route="auto"`` picks the closed form when one exists and the
    eigenfunction series otherwise.  The massless case uses the grounded
    kernel, which gives the same distance.
    """

    query: KernelQuery
    route: str = "auto"
    series_degree: int | None = None

    def __post_init__(self):
        if not self.query.pointwise:
            raise ValueError("noise distance needs s > n/2")
        self.query.model.require_closed()
        if self.route not in ("auto", CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL):
            raise ValueError(f"unknown route {self.route!r}")

    @property
    def method(self) -> str:
        if self.route != "auto":
            return self.route
        return CLOSED_FORM if has_closed_form(self.query) else EIGEN_SERIES

    def _kernel(self, r) -> np.ndarray:
        kw = {}
        if self.method == EIGEN_SERIES and self.series_degree is not None:
            kw["L_max"] = self.series_degree
        return np.array([v.value for v in kernel_radial(self.query, r, self.method, **kw)])

    @cached_property
    def diagonal(self) -> float:
        """``G(x, x)``, the same for every ``x``."""
        return float(self._kernel(0.0)[0])

    def radial(self, r) -> np.ndarray:
        """``rho`` as a function of geodesic distance."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        nz = r > 0
        if nz.any():
            out[nz] = np.sqrt(np.maximum(0.0, 2.0 * (self.diagonal - self._kernel(r[nz]))))
        return out

    @cached_property
    def _spline(self):
        # rho^2 against sqrt(r) is smooth enough for a cubic spline on S^2/S^3
        model = self.query.model
        u = np.linspace(0.0, math.sqrt(model.diameter), 2049)
        return CubicSpline(u, self.radial(u * u) ** 2)

    def radial_interp(self, r) -> np.ndarray:
        return np.sqrt(np.maximum(0.0, self._spline(np.sqrt(np.asarray(r, dtype=float)))))


def noise_distance(nm: NoiseMetric, x, y) -> float | np.ndarray:
    """``rho(x, y)``; broadcasts over arrays of point pairs."""
    r = geodesic_distance(nm.query.model, x, y)
    out = nm.radial(r)
    return float(out[0]) if np.ndim(r) == 0 else out


# ---------------------------------------------------------------------------
# pairwise distances on a grid

class _GridMetric:
    """Row access to the noise distance matrix of a point set."""

    def __init__(self, nm: NoiseMetric, grid):
        model = nm.query.model
        self.points = as_points(model, grid)
        self.size = self.points.shape[0]
        self.model = model
        self.uniform = False
        if model.kind == CIRCLE:
            M = self.size
            order = np.sort(self.points)
            if np.allclose(np.diff(order), 1.0 / M, atol=1e-12, rtol=0) and \
                    np.allclose(order, self.points, atol=0, rtol=0):
                self.uniform = True
                offsets = np.minimum(np.arange(M), M - np.arange(M)) / M
                self.table = nm.radial(offsets)
        if not self.uniform:
            self.nm = nm

    def row(self, i: int) -> np.ndarray:
        if self.uniform:
            idx = np.abs(np.arange(self.size) - i)
            return self.table[np.minimum(idx, self.size - idx)]
        r = geodesic_distance(self.model, self.points[i], self.points)
        if self.model.kind == CIRCLE:
            return self.nm.radial(r)
        return self.nm.radial_interp(r)


@dataclass(frozen=True, eq=False)
class CoveringProfile:
    """Greedy (farthest-point) covering data of a grid in the noise distance.

    ``radii[k-1]`` is the covering radius achieved by the first ``k`` centers of
    the traversal ``order``; it is nonincreasing and ends at 0.
    """

    eps: np.ndarray
    counts: np.ndarray
    lower: np.ndarray
    order: np.ndarray
    radii: np.ndarray
    mesh: float
    diameter: float
    info: dict = field(default_factory=dict)

    def centers(self, eps: float) -> np.ndarray:
        return self.order[:count_at(self.radii, eps)]

    def to_rows(self) -> list[tuple[float, int, float]]:
        return [(float(e), int(n), math.sqrt(math.log(n))) for e, n in zip(self.eps, self.counts)]


def count_at(radii: np.ndarray, eps: float) -> int:
    """Greedy count at scale ``eps``: first ``k`` with ``radii[k-1] <= eps``."""
    return int(np.searchsorted(-radii, -eps, side="left") + 1)


def farthest_point_traversal(nm: NoiseMetric, grid) -> tuple[np.ndarray, np.ndarray, float]:
    """Order of farthest-point insertion, covering radii, and the grid's rho-diameter."""
    gm = _GridMetric(nm, grid)
    N = gm.size
    first = gm.row(0)
    dmin = first.copy()
    order = [0]
    radii = [float(dmin.max())]
    diameter = float(first.max())
    while radii[-1] > 0 and len(order) < N:
        i = int(np.argmax(dmin))
        order.append(i)
        row = gm.row(i)
        diameter = max(diameter, float(row.max()))
        np.minimum(dmin, row, out=dmin)
        dmin[i] = 0.0
        radii.append(float(dmin.max()))
    return np.array(order), np.array(radii), diameter


def grid_mesh(nm: NoiseMetric, grid) -> float:
    """Noise distance from any point of the manifold to the grid (circle: exact)."""
    model = nm.query.model
    pts = as_points(model, grid)
    if model.kind == CIRCLE:
        gaps = np.diff(np.concatenate([np.sort(pts), [np.sort(pts)[0] + 1.0]]))
        return float(nm.radial(gaps.max() / 2.0)[0])
    # spheres: estimate through the largest nearest-neighbour gap
    from scipy.spatial import cKDTree
    tree = cKDTree(pts)
    d, _ = tree.query(pts, k=2)
    chord = float(d[:, 1].max())
    return float(nm.radial(2.0 * math.asin(min(1.0, chord / 2.0)))[0])


def covering_numbers(nm: NoiseMetric, grid, eps_list) -> CoveringProfile:
    """Greedy covering counts with a packing lower bracket.

    The first ``k + 1`` farthest-point centers are pairwise at least
    ``radii[k-1]`` apart, so at least ``k + 1`` balls of radius ``eps`` are needed
    whenever ``2 eps < radii[k-1]``; that count is returned as ``lower``.
    """
    eps = np.sort(np.asarray(eps_list, dtype=float))[::-1]
    if eps.size == 0 or np.any(eps <= 0):
        raise ValueError("eps_list must hold positive scales")
    mesh = grid_mesh(nm, grid)
    if not mesh < eps.min() / 4.0:
        raise ValueError(f"grid too coarse: rho-mesh {mesh:.3g} is not below min(eps)/4 = {eps.min() / 4:.3g}")
    order, radii, diameter = farthest_point_traversal(nm, grid)
    counts = np.array([count_at(radii, e) for e in eps])
    lower = np.array([1 + int(np.sum(radii[:-1] > 2.0 * e)) if radii.size > 1 else 1 for e in eps])
    lower = np.minimum(lower, counts)
    return CoveringProfile(eps, counts, lower, order, radii, mesh, diameter,
                           {"grid_size": len(as_points(nm.query.model, grid))})


def covering_profile(nm: NoiseMetric, grid, n_eps: int = 40) -> CoveringProfile:
    """Profile on a geometric scale grid from the mesh scale up to the diameter."""
    mesh = grid_mesh(nm, grid)
    order, radii, diameter = farthest_point_traversal(nm, grid)
    eps = np.geomspace(max(4.0 * mesh, 1e-12) * 1.0001, max(diameter, 4.0 * mesh * 1.01), n_eps)
    return covering_numbers(nm, grid, eps)


def dudley_bound(profile: CoveringProfile) -> float:
    """``24 int_0^inf sqrt(log N(eps)) d eps`` for the greedy count of the grid.

    The greedy count is a step function of ``eps`` known exactly through the
    traversal radii, so the integral is evaluated exactly; it dominates the
    minimal-cover integral, keeping the bound an upper bound for the grid
    process.
    """
    R = profile.radii
    if R.size <= 1:
        return 0.0
    k = np.arange(2, R.size + 1)
    # N(eps) = k on [R_k, R_{k-1}) with R indexed from 1
    widths = R[:-1] - R[1:]
    return float(24.0 * np.sum(np.sqrt(np.log(k)) * widths))


def dudley_mesh_term(profile: CoveringProfile) -> float:
    """Size of the part of the continuum integral below the grid's mesh scale (estimate)."""
    n = max(2, int(profile.info.get("grid_size", 2)))
    return float(24.0 * profile.mesh * math.sqrt(math.log(n)))


def holder_scan(nm: NoiseMetric, grid, alpha: float) -> float:
    """``max rho(x, y) / d(x, y)^alpha`` over distinct grid pairs."""
    s, n = nm.query.s, nm.query.model.dim
    admissible = (0 < alpha < s - n / 2.0 and alpha <= 1.0) or (alpha == 1.0 and s > n / 2.0 + 1.0)
    if not admissible:
        raise ValueError(f"alpha={alpha} outside the admissible range for s={s}, n={n}")
    gm = _GridMetric(nm, grid)
    if gm.uniform:
        M = gm.size
        k = np.arange(1, M // 2 + 1)
        return float(np.max(gm.table[k] / (k / M) ** alpha))
    best = 0.0
    pts = gm.points
    for i in range(gm.size):
        d = geodesic_distance(gm.model, pts[i], pts)
        rho = gm.row(i)
        mask = d > 0
        if mask.any():
            best = max(best, float(np.max(rho[mask] / d[mask] ** alpha)))
    return best
