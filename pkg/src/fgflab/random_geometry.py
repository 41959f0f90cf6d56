"""Volume, length and distance of the conformally perturbed metric ``e^{2h} g``.

Volumes carry the density ``e^{n h}``, lengths the factor ``e^{h}``.  On the
circle everything is evaluated on a uniform grid; on the 2-sphere volumes use
the product quadrature rule and distances a geodesic icosphere graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from ._runtime import STREAM_FIELD
from .fgf import FieldRealization, circle_grid_values, coefficient_scale, eval_field, noise_block
from .green_kernels import KernelQuery, default_ell, theta
from .montecarlo import MonteCarloReport, mc_run, mc_samples, summarize
from .spectral_basis import (
    CIRCLE, SPHERE2, QuadratureRule, SpectralBasis, as_points, geodesic_distance, quadrature,
)

EDGE_ARC = "arc"
EDGE_ENDPOINTS = "endpoints"
_EDGE_NODES, _EDGE_WEIGHTS = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# meshes

@dataclass(frozen=True, eq=False)
class SphereMesh:
    """Geodesic icosphere: unit-vector vertices and an undirected edge list."""

    vertices: np.ndarray
    edges: np.ndarray
    level: int

    @property
    def lengths(self) -> np.ndarray:
        a, b = self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]]
        return 2.0 * np.arcsin(np.clip(np.linalg.norm(a - b, axis=1) / 2.0, 0.0, 1.0))

    def nearest(self, x) -> tuple[int, float]:
        x = np.asarray(x, dtype=float)
        i = int(np.argmax(self.vertices @ x))
        return i, float(geodesic_distance_sphere(self.vertices[i], x))


def geodesic_distance_sphere(a, b) -> float:
    return float(2.0 * math.asin(min(1.0, float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / 2.0)))


def icosphere(level: int) -> SphereMesh:
    """Icosahedron refined ``level`` times by edge bisection projected to the sphere.

    Every refined edge lies on the great arc of its parent edge, so the graph
    of level ``k`` contains the arcs of level ``k-1`` as paths.
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    p = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
                  [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
                  [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]], dtype=float)
    faces = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                      [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                      [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                      [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    verts = list(v / np.linalg.norm(v, axis=1, keepdims=True))
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new)
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    return SphereMesh(np.array(verts), e, level)


# ---------------------------------------------------------------------------
# scenes

@dataclass(frozen=True, eq=False)
class ConformalScene:
    """A field together with the discretisation used for its geometry.

    ``resolution`` is the number of circle grid nodes, or the Gauss-Legendre
    order of the sphere quadrature; ``mesh_level`` is the icosphere level.
    """

    field: FieldRealization
    resolution: int = 1024
    mesh_level: int = 4

    def __post_init__(self):
        if self.field.model.kind not in (CIRCLE, SPHERE2):
            raise ValueError("random geometry is implemented on the circle and the 2-sphere")
        if self.field.s <= self.field.model.dim / 2.0:
            raise ValueError("geometry needs a continuous field (s > n/2)")

    @property
    def model(self):
        return self.field.model

    @cached_property
    def quad(self) -> QuadratureRule:
        return quadrature(self.model, self.resolution)

    @cached_property
    def node_values(self) -> np.ndarray:
        """Field values on the quadrature nodes."""
        if self.model.kind == CIRCLE:
            return circle_grid_values(self.field.coefficients, self.resolution)
        return eval_field(self.field, self.quad.nodes)

    @cached_property
    def volume_density(self) -> np.ndarray:
        return np.exp(self.model.dim * self.node_values)

    @cached_property
    def mesh(self) -> SphereMesh | None:
        return icosphere(self.mesh_level) if self.model.kind == SPHERE2 else None

    @cached_property
    def mesh_values(self) -> np.ndarray:
        if self.model.kind == CIRCLE:
            return self.node_values
        return eval_field(self.field, self.mesh.vertices)

    def field_at(self, x) -> np.ndarray:
        return eval_field(self.field, x)


@dataclass(frozen=True, eq=False)
class Curve:
    """Polygonal curve through ``points``; segments follow shortest geodesics."""

    model: object
    points: np.ndarray

    def __post_init__(self):
        pts = as_points(self.model, self.points)
        object.__setattr__(self, "points", pts)
        if pts.shape[0] < 2:
            raise ValueError("a curve needs at least two points")
        if np.any(self.segment_lengths >= self._injectivity):
            raise ValueError("consecutive points must be closer than the injectivity radius")

    @property
    def _injectivity(self) -> float:
        return 0.5 if self.model.kind == CIRCLE else math.pi

    @cached_property
    def segment_lengths(self) -> np.ndarray:
        return np.atleast_1d(geodesic_distance(self.model, self.points[:-1], self.points[1:]))

    @property
    def base_length(self) -> float:
        return float(self.segment_lengths.sum())

    @cached_property
    def midpoints(self) -> np.ndarray:
        a, b = self.points[:-1], self.points[1:]
        if self.model.kind == CIRCLE:
            d = np.mod(b - a + 0.5, 1.0) - 0.5
            return np.mod(a + d / 2.0, 1.0)
        m = a + b
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    @classmethod
    def circle_loop(cls, model, segments: int) -> "Curve":
        """The full unit loop traversed once."""
        return cls(model, np.arange(segments + 1) / segments)


# ---------------------------------------------------------------------------
# functionals

def conformal_volume(scene: ConformalScene, region: Callable | np.ndarray | None = None) -> float:
    """``sum w_i e^{n h(x_i)}`` over the quadrature nodes in ``region``."""
    w = scene.quad.weights
    if region is None:
        mask = np.ones(w.size, dtype=bool)
    elif callable(region):
        mask = np.asarray(region(scene.quad.nodes), dtype=bool)
    else:
        mask = np.asarray(region, dtype=bool)
    if mask.shape != w.shape:
        raise ValueError("region mask must cover the quadrature nodes")
    if not mask.any():
        raise ValueError("region contains no quadrature node")
    return float(np.sum(w[mask] * scene.volume_density[mask]))


def conformal_length(scene: ConformalScene, curve: Curve) -> float:
    """Midpoint rule ``sum_k e^{h(mid_k)} |segment_k|``."""
    if curve.base_length <= 0:
        raise ValueError("degenerate curve")
    h = scene.field_at(curve.midpoints)
    return float(np.sum(np.exp(h) * curve.segment_lengths))


def conformal_length_error(scene: ConformalScene, curve: Curve) -> float:
    """Difference between the midpoint rule on ``curve`` and on its halved segments."""
    pts = curve.points
    mids = curve.midpoints
    fine = np.empty((2 * pts.shape[0] - 1,) + pts.shape[1:])
    fine[0::2] = pts
    fine[1::2] = mids
    return abs(conformal_length(scene, Curve(curve.model, fine)) - conformal_length(scene, curve))


@dataclass(frozen=True)
class DistanceResult:
    value: float
    base: float
    h_min: float
    h_max: float
    snap: float
    path: np.ndarray | None = None

    @property
    def sandwich(self) -> bool:
        """``e^{min h} base <= value <= e^{max h} base``."""
        lo = math.exp(self.h_min) * self.base
        hi = math.exp(self.h_max) * self.base
        slack = 1e-12 * hi
        return lo - slack <= self.value <= hi + slack


def _circle_distance(scene: ConformalScene, x: float, y: float) -> DistanceResult:
    M = scene.resolution
    i, j = int(round(x * M)) % M, int(round(y * M)) % M
    snap = max(geodesic_distance(scene.model, x, i / M), geodesic_distance(scene.model, y, j / M))
    e = np.exp(scene.node_values)
    # trapezoid along the grid; cum[k] = integral from node 0 to node k
    seg = 0.5 * (e + np.roll(e, -1)) / M
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    a, b = min(i, j), max(i, j)
    inner = cum[b] - cum[a]
    outer = cum[M] - inner
    h = scene.node_values
    if inner <= outer:
        hs, base = h[a:b + 1], (b - a) / M
        val = inner
    else:
        hs, base = np.concatenate([h[b:], h[:a + 1]]), (M - (b - a)) / M
        val = outer
    return DistanceResult(float(val), float(base), float(hs.min()), float(hs.max()), float(snap))


def _sphere_edge_weights(scene: ConformalScene, rule: str) -> np.ndarray:
    mesh = scene.mesh
    lengths = mesh.lengths
    a, b = mesh.vertices[mesh.edges[:, 0]], mesh.vertices[mesh.edges[:, 1]]
    if rule == EDGE_ENDPOINTS:
        h = scene.mesh_values
        return np.exp(0.5 * (h[mesh.edges[:, 0]] + h[mesh.edges[:, 1]])) * lengths
    if rule != EDGE_ARC:
        raise ValueError(f"unknown edge rule {rule!r}")
    # Gauss-Legendre along the great arc from a to b
    t = 0.5 * (_EDGE_NODES + 1.0)
    sin_l = np.sin(lengths)
    pts = (np.sin(np.outer(1.0 - t, lengths).T) / sin_l[:, None])[:, :, None] * a[:, None, :] + \
          (np.sin(np.outer(t, lengths).T) / sin_l[:, None])[:, :, None] * b[:, None, :]
    h = scene.field_at(pts.reshape(-1, 3)).reshape(pts.shape[:2])
    return 0.5 * lengths * (np.exp(h) @ _EDGE_WEIGHTS)


def _sphere_graph(scene: ConformalScene, rule: str):
    mesh = scene.mesh
    w = _sphere_edge_weights(scene, rule)
    n = mesh.vertices.shape[0]
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    g = coo_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                   shape=(n, n)).tocsr()
    return g


def _sphere_distance(scene: ConformalScene, x, y, rule: str) -> DistanceResult:
    mesh = scene.mesh
    i, sx = mesh.nearest(x)
    j, sy = mesh.nearest(y)
    g = _sphere_graph(scene, rule)
    if connected_components(g, directed=False)[0] != 1:
        raise ValueError("mesh graph is disconnected")
    dist, pred = dijkstra(g, directed=False, indices=i, return_predecessors=True)
    path = [j]
    while path[-1] != i:
        path.append(int(pred[path[-1]]))
    path = np.array(path[::-1])
    L = mesh.lengths
    lookup = {(int(a), int(b)): k for k, (a, b) in enumerate(mesh.edges)}
    base = sum(L[lookup[(min(p, q), max(p, q))]] for p, q in zip(path[:-1], path[1:]))
    if rule == EDGE_ARC:
        t = 0.5 * (_EDGE_NODES + 1.0)
        samples = []
        for p, q in zip(path[:-1], path[1:]):
            a, b = mesh.vertices[p], mesh.vertices[q]
            ang = geodesic_distance_sphere(a, b)
            samples.append((np.sin((1 - t) * ang)[:, None] * a + np.sin(t * ang)[:, None] * b) / math.sin(ang))
        hs = np.concatenate([scene.mesh_values[path]] +
                            ([scene.field_at(np.concatenate(samples))] if samples else []))
    else:
        hs = scene.mesh_values[path]
    return DistanceResult(float(dist[j]), float(base), float(hs.min()), float(hs.max()),
                          max(sx, sy), path)


def conformal_distance(scene: ConformalScene, x, y, edge_rule: str = EDGE_ARC) -> DistanceResult:
    """Distance of ``e^{2h} g`` between the mesh nodes nearest to ``x`` and ``y``.

    Circle: the smaller of the two arc integrals of ``e^h`` (trapezoid on the
    grid).  2-sphere: Dijkstra on the icosphere, each edge weighted by the
    integral of ``e^h`` along its great arc (``edge_rule="arc"``) or by
    ``e^{(h(a)+h(b))/2}`` times its length (``"endpoints"``).  ``base`` is the
    base length of the chosen path, so the sandwich uses it.
    """
    if scene.model.kind == CIRCLE:
        return _circle_distance(scene, float(x), float(y))
    return _sphere_distance(scene, np.asarray(x, float), np.asarray(y, float), edge_rule)


# ---------------------------------------------------------------------------
# reference metrics

@dataclass(frozen=True)
class ReferenceMetrics:
    """Deterministic comparison metrics ``e^{n theta} g`` and ``e^{theta} g``.

    On homogeneous models the reference volume is ``e^{n^2 theta/2}`` times the
    base volume and the reference length ``e^{theta/2}`` times the base length.
    """

    theta: float
    dim: int

    @property
    def volume_factor(self) -> float:
        return math.exp(self.dim ** 2 * self.theta / 2.0)

    @property
    def length_factor(self) -> float:
        return math.exp(self.theta / 2.0)

    def volume(self, base_volume: float) -> float:
        return self.volume_factor * base_volume

    def length(self, base_length: float) -> float:
        return self.length_factor * base_length

    def distance(self, base_distance: float) -> float:
        return self.length_factor * base_distance


def reference_metrics(basis: SpectralBasis | None, q: KernelQuery) -> ReferenceMetrics:
    """Reference metrics of the truncated field on ``basis`` (or of the full field)."""
    return ReferenceMetrics(theta(basis, q), q.model.dim)


# ---------------------------------------------------------------------------
# Monte Carlo on the circle

@dataclass(frozen=True)
class CircleGeometryConfig:
    s: float = 1.0
    m: float = 1.0
    grounded: bool = False
    ell: int | None = None
    grid: int = 1024
    x: float = 0.0
    y: float = 0.25

    @property
    def query(self) -> KernelQuery:
        from .spectral_basis import ManifoldModel
        return KernelQuery(ManifoldModel.circle(), self.s, self.m, self.grounded)

    def resolved(self) -> "CircleGeometryConfig":
        """Fill in the default truncation (neglected variance below 1e-4 theta)."""
        return self if self.ell is not None else replace(self, ell=default_ell(self.query))


def circle_geometry_block(cfg: CircleGeometryConfig, seed: int, start: int, count: int) -> np.ndarray:
    """Per-replicate ``[vol, length, distance, sup h, inf h, sandwich ok]`` on the circle.

    The full loop's midpoint-rule length with ``grid`` segments coincides with
    the grid volume sum for ``n = 1``; it is evaluated on the offset grid so
    the two estimators use different nodes.
    """
    from .spectral_basis import ManifoldModel, eigen_data
    basis = eigen_data(ManifoldModel.circle(), cfg.ell)
    scale = coefficient_scale(basis, cfg.s, cfg.m, cfg.grounded)
    xi = noise_block(cfg.ell, seed, start, count, STREAM_FIELD)
    if cfg.grounded:
        xi[:, 0] = 0.0
    c = xi * scale
    M = cfg.grid
    h = circle_grid_values(c, M)
    hm = circle_grid_values(c, M, offset=0.5)
    e = np.exp(h)
    vol = e.mean(axis=1)
    length = np.exp(hm).mean(axis=1)
    i, j = int(round(cfg.x * M)) % M, int(round(cfg.y * M)) % M
    a, b = min(i, j), max(i, j)
    seg = 0.5 * (e + np.roll(e, -1, axis=1)) / M
    inner = seg[:, a:b].sum(axis=1)
    outer = seg.sum(axis=1) - inner
    dist = np.minimum(inner, outer)
    base = min(b - a, M - (b - a)) / M
    sup = h.max(axis=1)
    inf = h.min(axis=1)
    ok = (np.exp(inf) * base * (1 - 1e-12) <= dist) & (dist <= np.exp(sup) * base * (1 + 1e-12))
    return np.column_stack([vol, length, dist, sup, inf, ok.astype(float)])


@dataclass(frozen=True)
class GeometryReport:
    volume: MonteCarloReport
    length: MonteCarloReport
    distance: MonteCarloReport
    sup: MonteCarloReport
    sandwich_rate: float
    theta: float
    base_distance: float
    ell: int | None = None

    @property
    def checks(self) -> dict:
        ref = math.exp(self.theta / 2.0)
        upper = ref * self.base_distance
        lower = self.base_distance * math.exp(-self.sup.estimate)
        return {
            "volume_identity": self.volume.within(ref),
            "length_identity": self.length.within(ref),
            "volume_jensen": self.volume.estimate + 3 * self.volume.se >= 1.0,
            "length_jensen": self.length.estimate + 3 * self.length.se >= 1.0,
            "distance_upper": self.distance.estimate - 3 * self.distance.se <= upper,
            # lower end: d * exp(-E sup h); E sup h enters through its own MC error
            "distance_lower": self.distance.estimate + 3 * self.distance.se >=
                              self.base_distance * math.exp(-(self.sup.estimate + 3 * self.sup.se)),
            "distance_lower_value": lower,
            "sandwich_all": self.sandwich_rate == 1.0,
        }

    def to_dict(self, timing: bool = False) -> dict:
        return {"volume": self.volume.to_dict(timing), "length": self.length.to_dict(timing),
                "distance": self.distance.to_dict(timing), "sup": self.sup.to_dict(timing),
                "sandwich_rate": self.sandwich_rate, "theta": self.theta,
                "base_distance": self.base_distance, "ell": self.ell,
                "inequality_checks": self.checks}


def circle_geometry_mc(cfg: CircleGeometryConfig, n: int, seed: int, threads: int | None = None,
                       block: int = 256) -> GeometryReport:
    """Monte Carlo of the volume, loop length and distance expectations on the circle."""
    from .spectral_basis import ManifoldModel, eigen_data
    cfg = cfg.resolved()
    th = theta(eigen_data(ManifoldModel.circle(), cfg.ell), cfg.query)
    ref = math.exp(th / 2.0)
    rows = mc_samples(lambda sd, a, k: circle_geometry_block(cfg, sd, a, k), n, seed,
                      block=block, threads=threads)
    M = cfg.grid
    i, j = int(round(cfg.x * M)) % M, int(round(cfg.y * M)) % M
    base = min(abs(i - j), M - abs(i - j)) / M
    return GeometryReport(
        summarize("volume", rows[:, 0], seed, reference=ref),
        summarize("length", rows[:, 1], seed, reference=ref),
        summarize("distance", rows[:, 2], seed, reference=ref * base),
        summarize("sup_h", rows[:, 3], seed),
        float(rows[:, 5].mean()), th, base, cfg.ell)


__all__ = [
    "ConformalScene", "Curve", "SphereMesh", "icosphere", "conformal_volume", "conformal_length",
    "conformal_length_error", "conformal_distance", "DistanceResult", "ReferenceMetrics",
    "reference_metrics", "CircleGeometryConfig", "circle_geometry_block", "circle_geometry_mc",
    "GeometryReport", "mc_run",
]
