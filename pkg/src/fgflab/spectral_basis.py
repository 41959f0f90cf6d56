"""Model manifolds: eigendata of the Laplace-Beltrami operator, distances, quadrature.

Closed models (circle ``R/Z``, unit spheres S^2 and S^3) expose a discrete
spectrum.  Eigenpairs are grouped by *degree* ``L``: on the circle degree ``k``
holds ``sin(2 pi k x)`` and ``cos(2 pi k x)``, on the spheres degree ``L`` is the
space of harmonic polynomials of degree ``L``.  Kernels that only depend on the
geodesic distance are summed degree by degree through zonal (addition-theorem)
functions, which is why most consumers never touch individual eigenfunctions.

Eigenfunction ordering inside a degree (fixed so seeded samples are
reproducible):

* circle: ``phi_0 = 1``, ``phi_{2k-1} = sqrt2 sin(2 pi k x)``,
  ``phi_{2k} = sqrt2 cos(2 pi k x)``;
* S^2: order ``m = 0, 1, 1, 2, 2, ...`` with the cosine member before the sine
  member of each ``m``;
* S^3: lexicographic in ``(l, m, cos/sin)`` for the hyperspherical harmonics
  ``sin(chi)^l C^{(l+1)}_{L-l}(cos chi) Y_{l,m}(omega)``.

Weyl constants ``c`` with ``lambda_j >= c j^{2/n}`` for ``j >= 1``: circle
``pi^2``, S^2 ``2/3``, S^3 ``3 / 4^{2/3}`` (attained at ``j = 1`` or at the last
index of degree 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

CIRCLE = "circle"
SPHERE2 = "sphere2"
SPHERE3 = "sphere3"
EUCLIDEAN = "euclidean"
HYPERBOLIC3 = "hyperbolic3"

CLOSED_KINDS = (CIRCLE, SPHERE2, SPHERE3)

_VOLUME = {CIRCLE: 1.0, SPHERE2: 4.0 * np.pi, SPHERE3: 2.0 * np.pi**2}
_WEYL = {CIRCLE: np.pi**2, SPHERE2: 2.0 / 3.0, SPHERE3: 3.0 / 4.0 ** (2.0 / 3.0)}


@dataclass(frozen=True)
class ManifoldModel:
    """A model manifold, identified by ``kind`` and dimension ``dim``."""

    kind: str
    dim: int

    def __post_init__(self):
        fixed = {CIRCLE: 1, SPHERE2: 2, SPHERE3: 3, HYPERBOLIC3: 3}
        if self.kind in fixed:
            if self.dim != fixed[self.kind]:
                raise ValueError(f"{self.kind} has dimension {fixed[self.kind]}, got {self.dim}")
        elif self.kind == EUCLIDEAN:
            if int(self.dim) != self.dim or self.dim < 1:
                raise ValueError("Euclidean dimension must be a positive integer")
        else:
            raise ValueError(f"unknown manifold kind {self.kind!r}")

    @classmethod
    def circle(cls) -> "ManifoldModel":
        return cls(CIRCLE, 1)

    @classmethod
    def sphere2(cls) -> "ManifoldModel":
        return cls(SPHERE2, 2)

    @classmethod
    def sphere3(cls) -> "ManifoldModel":
        return cls(SPHERE3, 3)

    @classmethod
    def euclidean(cls, n: int) -> "ManifoldModel":
        return cls(EUCLIDEAN, int(n))

    @classmethod
    def hyperbolic3(cls) -> "ManifoldModel":
        return cls(HYPERBOLIC3, 3)

    @classmethod
    def from_name(cls, name: str) -> "ManifoldModel":
        """Parse ``circle``, ``sphere2``, ``sphere3``, ``hyperbolic3`` or ``euclideanN``."""
        key = name.strip().lower()
        if key.startswith(EUCLIDEAN):
            return cls.euclidean(int(key[len(EUCLIDEAN):] or 0))
        return {CIRCLE: cls.circle, SPHERE2: cls.sphere2, SPHERE3: cls.sphere3,
                HYPERBOLIC3: cls.hyperbolic3}[key]()

    @property
    def name(self) -> str:
        return f"{EUCLIDEAN}{self.dim}" if self.kind == EUCLIDEAN else self.kind

    @property
    def is_closed(self) -> bool:
        return self.kind in CLOSED_KINDS

    @property
    def volume(self) -> float:
        if not self.is_closed:
            raise ValueError(f"{self.name} has infinite volume")
        return _VOLUME[self.kind]

    @property
    def diameter(self) -> float:
        """Largest geodesic distance (closed models)."""
        if not self.is_closed:
            raise ValueError(f"{self.name} is unbounded")
        return 0.5 if self.kind == CIRCLE else np.pi

    @property
    def weyl_constant(self) -> float:
        return _WEYL[self.kind]

    def require_closed(self) -> None:
        if not self.is_closed:
            raise ValueError(f"{self.name} is a kernel-only model without discrete spectrum")


# ---------------------------------------------------------------------------
# degree bookkeeping

def degree_eigenvalue(model: ManifoldModel, L):
    """Eigenvalue of -Delta on degree ``L`` (vectorised)."""
    L = np.asarray(L, dtype=float)
    if model.kind == CIRCLE:
        return (2.0 * np.pi * L) ** 2
    if model.kind == SPHERE2:
        return L * (L + 1.0)
    if model.kind == SPHERE3:
        return L * (L + 2.0)
    model.require_closed()


def degree_multiplicity(model: ManifoldModel, L):
    L = np.asarray(L)
    if model.kind == CIRCLE:
        return np.where(L == 0, 1, 2)
    if model.kind == SPHERE2:
        return 2 * L + 1
    if model.kind == SPHERE3:
        return (L + 1) ** 2
    model.require_closed()


def degree_count(model: ManifoldModel, L_max: int) -> int:
    """Number of eigenpairs in degrees ``0..L_max``."""
    if model.kind == CIRCLE:
        return 2 * L_max + 1
    if model.kind == SPHERE2:
        return (L_max + 1) ** 2
    if model.kind == SPHERE3:
        return (L_max + 1) * (L_max + 2) * (2 * L_max + 3) // 6
    model.require_closed()


def index_degree(model: ManifoldModel, j):
    """Degree of the ``j``-th eigenpair (vectorised)."""
    j = np.asarray(j, dtype=np.int64)
    if model.kind == CIRCLE:
        return (j + 1) // 2
    model.require_closed()
    top = int(np.max(j, initial=0))
    L = 0
    while degree_count(model, L) <= top:
        L = 2 * L + 1
    cum = np.array([degree_count(model, d) for d in range(L + 1)], dtype=np.int64)
    return np.searchsorted(cum, j, side="right")


# ---------------------------------------------------------------------------
# points and distances

def as_points(model: ManifoldModel, x) -> np.ndarray:
    """Normalise a point or an array of points to the model's array layout.

    Circle points become a 1-d array of coordinates in [0, 1); sphere points a
    ``(N, n+1)`` array of unit vectors.
    """
    if model.kind == CIRCLE:
        a = np.atleast_1d(np.asarray(x, dtype=float))
        return np.mod(a, 1.0)
    if model.kind in (SPHERE2, SPHERE3):
        d = model.dim + 1
        a = np.atleast_2d(np.asarray(x, dtype=float))
        if a.shape[-1] != d:
            raise ValueError(f"{model.kind} points need {d} coordinates")
        norms = np.linalg.norm(a, axis=-1, keepdims=True)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("sphere points must be unit vectors")
        return a
    raise ValueError(f"{model.name} has no point representation")


def geodesic_distance(model: ManifoldModel, x, y) -> np.ndarray | float:
    """Geodesic distance; broadcasts over arrays of points."""
    scalar = np.ndim(x) == (0 if model.kind == CIRCLE else 1) and \
        np.ndim(y) == (0 if model.kind == CIRCLE else 1)
    if model.kind == CIRCLE:
        dx = np.abs(np.mod(np.asarray(x, float), 1.0) - np.mod(np.asarray(y, float), 1.0))
        d = np.minimum(dx, 1.0 - dx)
    elif model.kind in (SPHERE2, SPHERE3):
        a = np.asarray(x, float)
        b = np.asarray(y, float)
        chord = np.linalg.norm(a - b, axis=-1)
        d = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
    else:
        raise ValueError(f"{model.name}: distances are passed directly as radii")
    return float(d) if scalar else d


def random_points(model: ManifoldModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed points (normalised volume measure)."""
    if model.kind == CIRCLE:
        return rng.random(n)
    g = rng.standard_normal((n, model.dim + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def point_at_distance(model: ManifoldModel, r) -> np.ndarray:
    """Points at geodesic distance ``r`` from the base point (0 or the north pole)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if model.kind == CIRCLE:
        return r.copy()
    out = np.zeros((r.size, model.dim + 1))
    out[:, -1] = np.cos(r)
    out[:, 0] = np.sin(r)
    return out


def base_point(model: ManifoldModel) -> np.ndarray:
    return point_at_distance(model, 0.0)


# ---------------------------------------------------------------------------
# zonal functions

def addition_kernel(model: ManifoldModel, L: int, r) -> np.ndarray | float:
    """Sum of ``phi_j(x) phi_j(y)`` over degree ``L`` for points at distance ``r``.

    Also defined on the circle, where degree ``k >= 1`` gives ``2 cos(2 pi k r)``.
    """
    if L < 0:
        raise ValueError("degree must be nonnegative")
    r_arr = np.asarray(r, dtype=float)
    if model.kind == CIRCLE:
        out = np.ones_like(r_arr) if L == 0 else 2.0 * np.cos(2.0 * np.pi * L * r_arr)
    elif model.kind == SPHERE2:
        out = (2 * L + 1) / (4.0 * np.pi) * special.eval_legendre(L, np.cos(r_arr))
    elif model.kind == SPHERE3:
        out = (L + 1) / (2.0 * np.pi**2) * special.eval_chebyu(L, np.cos(r_arr))
    else:
        model.require_closed()
    return float(out) if np.ndim(r) == 0 else out


def zonal_sum(model: ManifoldModel, r, weights, L_start: int = 0, chunk: int = 1 << 18) -> np.ndarray:
    """``sum_L weights[L - L_start] * addition_kernel(L, r)`` for an array of radii."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    w = np.asarray(weights, dtype=float)
    total = np.zeros_like(r)
    if w.size == 0:
        return total
    if model.kind == SPHERE2:
        # three-term Legendre recurrence; stable in the forward direction
        c = np.cos(r)
        L_stop = L_start + w.size
        p_prev, p = np.zeros_like(c), np.ones_like(c)
        for L in range(0, L_stop):
            if L >= L_start:
                total += w[L - L_start] * (2 * L + 1) * p
            p_prev, p = p, ((2 * L + 1) * c * p - L * p_prev) / (L + 1)
        return total / (4.0 * np.pi)
    if model.kind == CIRCLE:
        for lo in range(0, w.size, chunk):
            Ls = np.arange(L_start + lo, L_start + min(lo + chunk, w.size), dtype=float)
            K = 2.0 * np.cos(2.0 * np.pi * np.outer(r, Ls))
            K[:, Ls == 0] = 1.0
            total += K @ w[lo:lo + Ls.size]
        return total
    if model.kind == SPHERE3:
        s = np.sin(r)
        near = np.abs(s) < 1e-6
        sign = np.where(np.cos(r) > 0, 1.0, -1.0)
        for lo in range(0, w.size, chunk):
            Ls = np.arange(L_start + lo, L_start + min(lo + chunk, w.size), dtype=float)
            with np.errstate(invalid="ignore", divide="ignore"):
                U = np.sin(np.outer(r, Ls + 1.0)) / s[:, None]
            if near.any():
                # U_L(+-1) = (+-1)^L (L+1)
                U[near] = (sign[near, None] ** Ls[None, :]) * (Ls[None, :] + 1.0)
            total += U @ (w[lo:lo + Ls.size] * (Ls + 1.0))
        return total / (2.0 * np.pi**2)
    model.require_closed()


# ---------------------------------------------------------------------------
# explicit real harmonics

def _sphere2_harmonics(points: np.ndarray, L_max: int) -> np.ndarray:
    """Real orthonormal harmonics of degrees 0..L_max at unit vectors in R^3."""
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    ct = np.clip(z, -1.0, 1.0)
    st = np.sqrt(np.maximum(0.0, 1.0 - ct * ct))
    phi = np.arctan2(y, x)
    N = points.shape[0]
    # normalised associated Legendre functions Pbar[L][m]
    P = np.zeros((L_max + 1, L_max + 1, N))
    P[0, 0] = np.sqrt(1.0 / (4.0 * np.pi))
    for m in range(1, L_max + 1):
        P[m, m] = np.sqrt((2 * m + 1) / (2.0 * m)) * st * P[m - 1, m - 1]
    for m in range(0, L_max):
        P[m + 1, m] = np.sqrt(2 * m + 3.0) * ct * P[m, m]
    for m in range(0, L_max + 1):
        for L in range(m + 2, L_max + 1):
            a = np.sqrt((4.0 * L * L - 1.0) / (L * L - m * m))
            b = np.sqrt(((L - 1.0) ** 2 - m * m) / (4.0 * (L - 1.0) ** 2 - 1.0))
            P[L, m] = a * (ct * P[L - 1, m] - b * P[L - 2, m])
    cols = []
    for L in range(L_max + 1):
        cols.append(P[L, 0])
        for m in range(1, L + 1):
            cols.append(np.sqrt(2.0) * P[L, m] * np.cos(m * phi))
            cols.append(np.sqrt(2.0) * P[L, m] * np.sin(m * phi))
    return np.stack(cols, axis=1)


def _sphere3_harmonics(points: np.ndarray, L_max: int) -> np.ndarray:
    """Real orthonormal hyperspherical harmonics of degrees 0..L_max on S^3 in R^4."""
    w = points[:, 3]
    rest = points[:, :3]
    sc = np.linalg.norm(rest, axis=1)
    omega = np.where(sc[:, None] > 1e-15, rest / np.maximum(sc, 1e-300)[:, None], [0.0, 0.0, 1.0])
    Y2 = _sphere2_harmonics(omega, L_max)
    cols = []
    for L in range(L_max + 1):
        for l in range(L + 1):
            log_norm = (np.log(np.pi) - (2 * l + 1) * np.log(2.0) + special.gammaln(L + l + 2)
                        - special.gammaln(L - l + 1) - np.log(L + 1.0) - 2.0 * special.gammaln(l + 1))
            radial = sc**l * special.eval_gegenbauer(L - l, l + 1.0, w) * np.exp(-0.5 * log_norm)
            for k in range(l * l, (l + 1) ** 2):
                cols.append(radial * Y2[:, k])
    return np.stack(cols, axis=1)


# sphere harmonic evaluation is exact-ish only for moderate degree
EXPLICIT_DEGREE_LIMIT = {SPHERE2: 200, SPHERE3: 40}


@dataclass(frozen=True)
class SpectralBasis:
    """The first ``ell`` eigenpairs of -Delta on a closed model."""

    model: ManifoldModel
    ell: int

    @cached_property
    def degrees(self) -> np.ndarray:
        return index_degree(self.model, np.arange(self.ell))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return degree_eigenvalue(self.model, self.degrees)

    @property
    def max_degree(self) -> int:
        return int(self.degrees[-1])

    @property
    def complete_degree(self) -> int:
        """Largest degree whose whole eigenspace is retained."""
        L = self.max_degree
        return L if degree_count(self.model, L) <= self.ell else L - 1

    def functions(self, x) -> np.ndarray:
        """Matrix ``Phi[i, j] = phi_j(x_i)`` of shape ``(npoints, ell)``."""
        pts = as_points(self.model, x)
        if self.model.kind == CIRCLE:
            j = np.arange(self.ell)
            k = (j + 1) // 2
            arg = 2.0 * np.pi * np.outer(pts, k)
            out = np.where(j % 2 == 1, np.sqrt(2.0) * np.sin(arg), np.sqrt(2.0) * np.cos(arg))
            out[:, 0] = 1.0
            return out
        L = self.max_degree
        if L > EXPLICIT_DEGREE_LIMIT[self.model.kind]:
            raise ValueError(f"explicit harmonics limited to degree {EXPLICIT_DEGREE_LIMIT[self.model.kind]}")
        full = _sphere2_harmonics(pts, L) if self.model.kind == SPHERE2 else _sphere3_harmonics(pts, L)
        return full[:, :self.ell]

    def phi(self, j: int, x) -> np.ndarray:
        if not 0 <= j < self.ell:
            raise IndexError(f"eigenfunction index {j} outside 0..{self.ell - 1}")
        return self.functions(x)[:, j]


def eigen_data(model: ManifoldModel, ell: int) -> SpectralBasis:
    """First ``ell`` eigenpairs of a closed model."""
    model.require_closed()
    if ell < 1:
        raise ValueError("ell must be at least 1")
    return SpectralBasis(model, int(ell))


def eigen_data_degree(model: ManifoldModel, L_max: int) -> SpectralBasis:
    """All eigenpairs up to and including degree ``L_max``."""
    model.require_closed()
    return SpectralBasis(model, degree_count(model, int(L_max)))


# ---------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights; the weights sum to the volume of the model."""

    model: ManifoldModel
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> np.ndarray:
        return np.tensordot(np.asarray(values), self.weights, axes=([-1], [0]))


def _sphere2_rule(res: int) -> tuple[np.ndarray, np.ndarray]:
    u, wu = special.roots_legendre(res)
    nphi = 2 * res
    ph = 2.0 * np.pi * np.arange(nphi) / nphi
    U, PH = np.meshgrid(u, ph, indexing="ij")
    st = np.sqrt(1.0 - U * U)
    nodes = np.stack([st * np.cos(PH), st * np.sin(PH), U], axis=-1).reshape(-1, 3)
    weights = np.repeat(wu, nphi) * (2.0 * np.pi / nphi)
    return nodes, weights


def quadrature(model: ManifoldModel, resolution: int) -> QuadratureRule:
    """Spectrally exact product rule.

    Circle: ``resolution`` uniform nodes (exact for trigonometric polynomials of
    degree below ``resolution``).  S^2: Gauss-Legendre in ``cos(theta)`` times a
    uniform azimuth rule with ``2 * resolution`` nodes.  S^3: Gauss-Chebyshev
    (second kind) in ``cos(chi)`` times the S^2 rule.
    """
    model.require_closed()
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if model.kind == CIRCLE:
        nodes = np.arange(resolution) / resolution
        weights = np.full(resolution, 1.0 / resolution)
    elif model.kind == SPHERE2:
        nodes, weights = _sphere2_rule(resolution)
    else:
        u, wu = special.roots_chebyu(resolution)
        n2, w2 = _sphere2_rule(resolution)
        sc = np.sqrt(1.0 - u * u)
        nodes = np.concatenate([sc[:, None, None] * n2[None, :, :],
                                np.broadcast_to(u[:, None, None], (u.size, n2.shape[0], 1))], axis=2)
        nodes = nodes.reshape(-1, 4)
        weights = np.outer(wu, w2).ravel()
    return QuadratureRule(model, nodes, weights)
