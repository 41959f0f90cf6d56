"""Green kernels of ``A_m^s`` with ``A_m = m^2 - Delta/2``.

``G_{s,m}`` is the kernel of ``A_m^{-s}`` and ``G0_{s,m}`` (grounded) the kernel
of the same operator restricted to functions with zero mean.  Three
independent evaluation routes are provided:

``closed_form``
    explicit formulas (torus, spheres, Euclidean space, hyperbolic 3-space);
``eigen_series``
    the eigenfunction expansion ``sum_j phi_j(x) phi_j(y) (m^2 + lambda_j/2)^{-s}``
    summed degree by degree, with a Weyl-type tail bound;
``heat_integral``
    ``Gamma(s)^{-1} int_0^inf t^{s-1} e^{-m^2 t} p_t dt`` by composite Gauss
    quadrature of the heat kernel ``p_t`` of ``e^{t Delta/2}``.

On homogeneous models every kernel is a function of the geodesic distance
``r``; the ``*_radial`` functions take ``r`` directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .spectral_basis import (
    CIRCLE, EUCLIDEAN, HYPERBOLIC3, SPHERE2, SPHERE3,
    ManifoldModel, SpectralBasis, degree_count, degree_eigenvalue, degree_multiplicity,
    eigen_data_degree, geodesic_distance, zonal_sum,
)

CLOSED_FORM = "closed_form"
EIGEN_SERIES = "eigen_series"
HEAT_INTEGRAL = "heat_integral"
METHODS = (CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL)

DEFAULT_SERIES_TOL = 1e-8
# beyond this many degrees the plain partial sum is replaced by the smoothed one
MAX_PLAIN_DEGREES = 1 << 21


class DivergentKernel(ValueError):
    """Raised when a kernel is evaluated where it is infinite."""


@dataclass(frozen=True)
class KernelQuery:
    model: ManifoldModel
    s: float
    m: float
    grounded: bool = False

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("regularity s must be positive")
        if self.m < 0:
            raise ValueError("mass m must be nonnegative")
        if self.grounded and not self.model.is_closed:
            raise ValueError("grounded kernels need a closed model")
        if not self.grounded and self.m == 0:
            raise ValueError("massless kernels must be grounded")

    @property
    def n(self) -> int:
        return self.model.dim

    @property
    def pointwise(self) -> bool:
        """True when the kernel is finite on the diagonal (s > n/2)."""
        return self.s > self.n / 2.0


@dataclass(frozen=True)
class KernelValue:
    value: float
    method: str
    error_estimate: float
    info: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# Euclidean space

def _euclid_log_integrand(n, s, m, r, increment):
    b = s - n / 2.0
    r2h = 0.5 * r * r

    def f(u):
        if u > 700.0:
            return 0.0
        expo = -m * m * math.exp(u) + b * u
        if expo < -745.0:
            return 0.0
        inv = math.exp(-u) if u > -700.0 else math.inf
        if increment:
            # 1 - exp(-r^2/2t) without cancellation
            damp = -math.expm1(-r2h * inv) if r2h > 0 else 0.0
            return damp * math.exp(expo)
        return math.exp(expo - r2h * inv) if r2h > 0 else math.exp(expo)

    return f


def _euclid_quad(n, s, m, r, increment=False):
    b = s - n / 2.0
    f = _euclid_log_integrand(n, s, m, r, increment)
    marks = []
    if r > 0:
        marks.append(math.log(0.5 * r * r))
    if b > 0:
        marks.append(math.log(b / (m * m)))
    disc = b * b + 2.0 * m * m * r * r
    if b + math.sqrt(disc) > 0:
        marks.append(math.log((b + math.sqrt(disc)) / (2.0 * m * m)))
    marks = sorted(set(marks))
    edges = [-np.inf] + marks + [np.inf]
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo == hi:
            continue
        with warnings.catch_warnings():
            # roundoff warnings near machine precision; the estimate is returned
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            v, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=2e-14, limit=400)
        total += v
        err += e
    c = 1.0 / ((2.0 * math.pi) ** (n / 2.0) * math.gamma(s))
    return c * total, c * err


def euclidean_green(n: float, s: float, m: float, r: float, with_error: bool = False):
    """``G^n_{s,m}(r)`` on R^n by quadrature of its heat-kernel time integral.

    ``n`` may be any positive real (the formula is analytic in ``n``).
    """
    if not (n > 0 and s > 0 and m > 0 and r >= 0):
        raise ValueError("need n > 0, s > 0, m > 0, r >= 0")
    if r == 0 and s <= n / 2.0:
        raise DivergentKernel("G^n_{s,m}(0) is infinite for s <= n/2")
    val, err = _euclid_quad(n, s, m, float(r))
    return (val, err) if with_error else val


def euclidean_green_increment(n: float, s: float, m: float, r: float) -> float:
    """``G(0) - G(r)`` computed without cancellation (needs s > n/2)."""
    if s <= n / 2.0:
        raise DivergentKernel("increment needs s > n/2")
    return _euclid_quad(n, s, m, float(r), increment=True)[0]


def euclidean_green_bessel(n: float, s: float, m: float, r: float) -> float:
    """``G^n_{s,m}(r)`` through the modified Bessel function ``K_{s-n/2}``."""
    if not r > 0:
        raise ValueError("Bessel form needs r > 0")
    nu = s - n / 2.0
    z = math.sqrt(2.0) * m * r
    # kve avoids underflow for large arguments
    log_pref = (math.log(2.0) - (n / 2.0) * math.log(2.0 * math.pi) - special.gammaln(s)
                + nu * math.log(r / (math.sqrt(2.0) * m)))
    return float(math.exp(log_pref - z) * special.kve(nu, z))


def asymptotic_profile(n: float, s: float, m: float) -> tuple[float, float, bool]:
    """Leading behaviour of ``G(0) - G(r)`` as ``r -> 0``.

    Returns ``(exponent, constant, log_flag)`` meaning
    ``G(0) - G(r) ~ constant * r^exponent * (log(1/r) if log_flag else 1)``.
    """
    if s <= n / 2.0:
        raise ValueError("asymptotic profile needs s > n/2")
    if m <= 0:
        raise ValueError("asymptotic profile needs m > 0")
    h = n / 2.0
    if s < h + 1:
        const = -special.gamma(h - s) / (2.0**s * math.pi**h * special.gamma(s))
        return 2.0 * s - n, float(const), False
    if s == h + 1:
        return 2.0, float(1.0 / (2.0**h * math.pi**h * special.gamma(s))), True
    const = special.gamma(s - h - 1) / (2.0 ** (h + 1) * m ** (2 * s - n - 2) * math.pi**h * special.gamma(s))
    return 2.0, float(const), False


# ---------------------------------------------------------------------------
# torus

def _reduce_circle(r):
    r = np.mod(np.asarray(r, dtype=float), 1.0)
    return np.minimum(r, 1.0 - r)


def torus_green(m: float, r):
    """``G_{1,m}`` on R/Z at distance ``r``."""
    if not m > 0:
        raise ValueError("torus_green needs m > 0")
    r = _reduce_circle(r)
    k = math.sqrt(2.0) * m
    out = np.cosh(k * (r - 0.5)) / (k * math.sinh(m / math.sqrt(2.0)))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def bernoulli_numbers(N: int) -> tuple[Fraction, ...]:
    """``B_0..B_N`` (with ``B_1 = -1/2``) as exact fractions."""
    B = [Fraction(1)]
    for k in range(1, N + 1):
        B.append(-sum(math.comb(k + 1, j) * B[j] for j in range(k)) / Fraction(k + 1))
    return tuple(B)


@lru_cache(maxsize=None)
def bernoulli_polynomial(N: int) -> tuple[Fraction, ...]:
    """Coefficients of ``B_N(x)``, lowest degree first."""
    B = bernoulli_numbers(N)
    return tuple(math.comb(N, k) * B[N - k] for k in range(N + 1))


def torus_green_grounded(s: int, r):
    """Massless grounded kernel on R/Z for integer ``s``: a Bernoulli polynomial."""
    if int(s) != s or s < 1:
        raise ValueError("closed form needs a positive integer s; use series_green")
    s = int(s)
    r = _reduce_circle(r)
    coeffs = bernoulli_polynomial(2 * s)
    scale = Fraction((-1) ** (s - 1) * 2**s, math.factorial(2 * s))
    poly = [float(scale * c) for c in coeffs]
    out = np.polynomial.polynomial.polyval(r, poly)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# spheres and hyperbolic space

def _neg_dilog_tail(x: float) -> float:
    """``int_0^x log t / (1 - t) dt`` for ``0 <= x <= 1``.

    With ``t = e^{-u}`` the integral becomes ``-int_{-log x}^inf u/(e^u - 1) du``
    whose integrand is smooth and exponentially decaying.
    """
    if x <= 0:
        return 0.0
    a = -math.log(x)

    def g(u):
        return 1.0 if u == 0.0 else u * math.exp(-u) / -math.expm1(-u)

    val, _ = integrate.quad(g, a, np.inf, epsabs=0.0, epsrel=2e-14, limit=200)
    return -val


def sphere_green_grounded(model: ManifoldModel, s: int, r):
    """Massless grounded kernels on S^2 and S^3 for ``s`` in {1, 2}."""
    if model.kind not in (SPHERE2, SPHERE3):
        raise ValueError("closed forms exist for sphere2 and sphere3 only")
    if s not in (1, 2):
        raise ValueError("closed forms exist for s in {1, 2}")
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0) or np.any(r_arr > np.pi + 1e-12):
        raise ValueError("r must lie in [0, pi]")
    r_arr = np.minimum(r_arr, np.pi)
    if model.kind == SPHERE2 and s == 1:
        if np.any(r_arr == 0):
            raise DivergentKernel("logarithmic singularity at r = 0")
        out = -(1.0 + 2.0 * np.log(np.sin(r_arr / 2.0))) / (2.0 * np.pi)
    elif model.kind == SPHERE2:
        out = np.array([(_neg_dilog_tail(math.sin(v / 2.0) ** 2) + 1.0) / np.pi for v in r_arr])
    elif s == 1:
        if np.any(r_arr == 0):
            raise DivergentKernel("pole at r = 0")
        with np.errstate(divide="ignore", invalid="ignore"):
            cot_term = np.where(r_arr >= np.pi, -1.0, (np.pi - r_arr) / np.tan(r_arr))
        out = (-0.5 + cot_term) / (2.0 * np.pi**2)
    else:
        out = (np.pi - r_arr) ** 2 / (4.0 * np.pi**2) + 1.0 / (8.0 * np.pi**2) - 1.0 / 12.0
    return float(out[0]) if np.ndim(r) == 0 else out


def hyperbolic3_green(s: float, m: float, r: float) -> float:
    """``G_{s,m}`` on hyperbolic 3-space: a damped Euclidean kernel with shifted mass."""
    if not r > 0:
        raise ValueError("hyperbolic kernel needs r > 0")
    if m < 0:
        raise ValueError("m must be nonnegative")
    ratio = r / math.sinh(r) if r < 700 else 0.0
    return ratio * euclidean_green(3, s, math.sqrt(m * m + 0.5), r)


# ---------------------------------------------------------------------------
# eigenfunction series

def _degree_rate(model, m, L):
    return m * m + 0.5 * degree_eigenvalue(model, L)


def _tail_density(model, s, m):
    vol = model.volume

    def f(u):
        mult = 2.0 if model.kind == CIRCLE else (2 * u + 1 if model.kind == SPHERE2 else (u + 1) ** 2)
        return mult / vol * _degree_rate(model, m, u) ** (-s)

    return f


def weyl_tail(model: ManifoldModel, s: float, m: float, L_max: int) -> float:
    """Upper bound for ``sum_{L > L_max} mult(L)/vol * (m^2 + mu_L/2)^{-s}``.

    This bounds the truncation error of the series at any pair of points
    because each zonal function is dominated by its diagonal value.
    """
    if s <= model.dim / 2.0:
        return np.inf
    f = _tail_density(model, s, m)
    explicit = 0.0
    L = int(L_max)
    # the density is unimodal; sum explicitly until it decreases
    while f(L + 1.0) > f(float(L)) or L < 1:
        L += 1
        explicit += f(float(L))
    # u = L / v maps the tail onto (0, 1]
    g = lambda v: f(L / v) * L / (v * v) if v > 0 else 0.0
    val, _ = integrate.quad(g, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)
    return explicit + val


def series_degree(model: ManifoldModel, s: float, m: float, tol: float = DEFAULT_SERIES_TOL) -> int:
    """Smallest degree whose Weyl tail bound is below ``tol``."""
    if s <= model.dim / 2.0:
        raise ValueError("series tail is infinite for s <= n/2")
    hi = 1
    while weyl_tail(model, s, m, hi) >= tol:
        hi *= 2
        if hi > 1 << 40:
            raise RuntimeError("tail bound does not reach tolerance")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if weyl_tail(model, s, m, mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def series_basis(q: KernelQuery, tol: float = DEFAULT_SERIES_TOL) -> SpectralBasis:
    """Basis whose complete degrees meet the series tail tolerance."""
    return eigen_data_degree(q.model, series_degree(q.model, q.s, q.m, tol))


def _series_plain(q, r, L_max):
    L = np.arange(0 if not q.grounded else 1, L_max + 1)
    w = _degree_rate(q.model, q.m, L) ** (-q.s)
    if np.all(r == 0):
        return np.full(r.shape, float(np.sum(w * degree_multiplicity(q.model, L))) / q.model.volume)
    return zonal_sum(q.model, r, w, L_start=int(L[0]))


SMOOTHING_EXPONENT = 40.0
# the smoothed sum needs ~1/r degrees; below the matching r it is not attempted
MAX_SMOOTHED_DEGREES = 1 << 23


def _series_smoothed(q, r_scalar):
    """Series with the heat-type convergence factor ``Q(s, a_L tau)``.

    ``tau`` is chosen so the discarded short-time piece of the heat integral
    is below ``exp(-SMOOTHING_EXPONENT)``; only its constant part survives and
    is added analytically.
    """
    model, s, m = q.model, q.s, q.m
    tau = r_scalar * r_scalar / (2.0 * SMOOTHING_EXPONENT)
    L_top = 1
    while _degree_rate(model, m, L_top) * tau < 80.0 + 4.0 * s:
        L_top *= 2
        if L_top > MAX_SMOOTHED_DEGREES:
            return None
    L = np.arange(0 if not q.grounded else 1, L_top + 1)
    a = _degree_rate(model, m, L)
    w = special.gammaincc(s, a * tau) * a ** (-s)
    val = zonal_sum(model, np.array([r_scalar]), w, L_start=int(L[0]))[0]
    if q.grounded:
        if m > 0:
            val -= special.gammainc(s, m * m * tau) * m ** (-2.0 * s) / model.volume
        else:
            val -= tau**s / special.gamma(s + 1.0) / model.volume
    n = model.dim
    remainder = (10.0 * tau**s / special.gamma(s + 1.0) * (2 * np.pi * tau) ** (-n / 2.0)
                 * max(1.0, tau ** -0.5) * math.exp(-SMOOTHING_EXPONENT))
    return float(val), float(remainder), int(L_top)


def series_green_radial(q: KernelQuery, r, L_max: int | None = None,
                        tol: float = DEFAULT_SERIES_TOL) -> list[KernelValue]:
    """Eigenfunction series at distances ``r``.

    With ``L_max`` given the plain partial sum through that degree is used.
    Otherwise the degree comes from the tail rule; when that needs more than
    ``MAX_PLAIN_DEGREES`` degrees (or when ``s <= n/2``) off-diagonal values use
    the smoothed rearrangement of the same series.
    """
    q.model.require_closed()
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if q.model.kind == CIRCLE:
        r = _reduce_circle(r)
    out = [None] * r.size
    smooth_idx = []
    if L_max is None:
        if q.pointwise:
            L_max = series_degree(q.model, q.s, q.m, tol)
            if L_max > MAX_PLAIN_DEGREES:
                smooth_idx = [i for i in range(r.size) if r[i] > 0]
                L_max = MAX_PLAIN_DEGREES
        else:
            smooth_idx = list(range(r.size))
    elif not q.pointwise:
        raise DivergentKernel("plain series diverges for s <= n/2")
    for i in smooth_idx:
        if r[i] == 0:
            raise DivergentKernel("kernel is infinite on the diagonal for s <= n/2")
        res = _series_smoothed(q, r[i])
        if res is None:
            if q.pointwise:
                continue  # the capped plain sum below, with its tail bound
            raise ValueError(f"r={r[i]:.3g} too close to the singularity for the series route")
        v, e, L_top = res
        out[i] = KernelValue(v, EIGEN_SERIES, e, {"variant": "smoothed", "degrees": L_top})
    plain_idx = [i for i in range(r.size) if out[i] is None]
    if plain_idx:
        vals = _series_plain(q, r[plain_idx], L_max)
        tail = weyl_tail(q.model, q.s, q.m, L_max)
        for i, v in zip(plain_idx, vals):
            out[i] = KernelValue(float(v), EIGEN_SERIES, tail, {"variant": "plain", "degrees": L_max})
    return out


def series_green(basis: SpectralBasis, q: KernelQuery, x, y) -> KernelValue:
    """Partial sum of the eigenfunction expansion over the complete degrees of ``basis``."""
    if basis.model != q.model:
        raise ValueError("basis and query live on different models")
    if not q.pointwise:
        raise DivergentKernel("series needs s > n/2; use series_green_radial for r > 0")
    r = geodesic_distance(q.model, x, y)
    return series_green_radial(q, r, L_max=basis.complete_degree)[0]


# ---------------------------------------------------------------------------
# heat-kernel time integral

def _zonal_table(model, r, L_max):
    """``K_L(r)`` for ``L = 0..L_max`` at a single distance."""
    L = np.arange(L_max + 1)
    vol = model.volume
    if r == 0:
        return degree_multiplicity(model, L) / vol
    if model.kind == CIRCLE:
        K = 2.0 * np.cos(2.0 * np.pi * L * r)
        K[0] = 1.0
        return K
    if model.kind == SPHERE3:
        sr = math.sin(r)
        if abs(sr) < 1e-8:
            sign = 1.0 if math.cos(r) > 0 else -1.0
            U = sign**L * (L + 1.0)
        else:
            U = np.sin((L + 1.0) * r) / sr
        return (L + 1.0) * U / (2.0 * np.pi**2)
    c = math.cos(r)
    P = np.empty(L_max + 1)
    P[0] = 1.0
    if L_max >= 1:
        P[1] = c
    for k in range(1, L_max):
        P[k + 1] = ((2 * k + 1) * c * P[k] - k * P[k - 1]) / (k + 1)
    return (2.0 * L + 1.0) * P / (4.0 * np.pi)


def _heat_degree(model, t_min, cutoff=46.0):
    L = 1
    while 0.5 * degree_eigenvalue(model, L) * t_min < cutoff + 2.0 * math.log(L + 1.0):
        L *= 2
    return L


def _gauss_legendre_panels(edges, nodes):
    x, w = special.roots_legendre(nodes)
    ts, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        ts.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * w)
    return np.concatenate(ts), np.concatenate(ws)


def _heat_value(q, r, nodes):
    model, s, m = q.model, q.s, q.m
    n, vol = model.dim, model.volume
    mu1 = degree_eigenvalue(model, 1)
    a1 = m * m + 0.5 * mu1

    def lower_gamma(x_hi):  # int_0^x_hi t^{s-1} e^{-m^2 t} dt
        if m > 0:
            return special.gammainc(s, m * m * x_hi) * special.gamma(s) * m ** (-2.0 * s)
        return x_hi**s / s

    t_nodes, t_weights, blocks = [], [], []
    total = 0.0
    if r > 0:
        t_lo = min(r * r / (2.0 * 46.0), 0.5)
        total -= lower_gamma(t_lo) / vol
        k = max(1, int(math.ceil(math.log2(1.0 / t_lo))))
        edges = t_lo * 2.0 ** np.arange(k + 1)
        edges[-1] = 1.0
        edges = np.unique(np.clip(edges, t_lo, 1.0))
        tt, ww = _gauss_legendre_panels(edges, nodes)
        t_nodes.append(tt)
        t_weights.append(ww * tt ** (s - 1.0) * np.exp(-m * m * tt))
        blocks.append("P")
    else:
        b = s - n / 2.0
        if b <= 0:
            raise DivergentKernel("kernel is infinite on the diagonal for s <= n/2")
        x, w = special.roots_jacobi(3 * nodes, 0.0, b - 1.0)
        tt = 0.5 * (x + 1.0)
        ww = w * 0.5**b
        total -= lower_gamma(1.0) / vol
        t_nodes.append(tt)
        t_weights.append(ww * tt ** (n / 2.0) * np.exp(-m * m * tt))
        blocks.append("p_full_scaled")
    # [1, T] by dyadic panels, then a Gauss-Laguerre tail beyond T
    T = 1.0
    while a1 * T < 60.0:
        T *= 2.0
    if T > 1.0:
        edges = 2.0 ** np.arange(int(round(math.log2(T))) + 1)
        tt, ww = _gauss_legendre_panels(edges, nodes)
        t_nodes.append(tt)
        t_weights.append(ww * tt ** (s - 1.0) * np.exp(-m * m * tt))
        blocks.append("P")
    u, wu = special.roots_laguerre(nodes)
    tt = T + u / a1
    t_nodes.append(tt)
    # e^{-a1 t} pulled into the Laguerre weight, restored through e^{mu1 t/2}
    t_weights.append(wu / a1 * math.exp(-a1 * T) * tt ** (s - 1.0))
    blocks.append("P_scaled")

    t_all = np.concatenate(t_nodes)
    L_max = _heat_degree(model, t_all.min())
    K = _zonal_table(model, r, L_max)
    mu = degree_eigenvalue(model, np.arange(L_max + 1))
    for tt, ww, kind in zip(t_nodes, t_weights, blocks):
        if kind == "P":
            E = np.exp(-0.5 * np.outer(tt, mu[1:]))
            vals = E @ K[1:]
        elif kind == "P_scaled":
            E = np.exp(-0.5 * np.outer(tt, mu[1:] - mu1))
            vals = E @ K[1:]
        else:
            E = np.exp(-0.5 * np.outer(tt, mu))
            vals = E @ K
        total += float(np.dot(ww, vals))
    return total


def heat_integral_radial(q: KernelQuery, r, nodes: int = 24) -> list[KernelValue]:
    """Heat-kernel time integral at distances ``r``.

    The short-time stretch ``(0, r^2/92]`` where ``p_t`` is negligible off the
    diagonal contributes only through the constant ``-1/vol`` and is added in
    closed form; the diagonal uses Gauss-Jacobi with the ``t^{s-n/2-1}``
    endpoint weight.  The error estimate compares two node counts.
    """
    q.model.require_closed()
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if q.model.kind == CIRCLE:
        r = _reduce_circle(r)
    out = []
    for rv in r:
        hi = _heat_value(q, float(rv), nodes) / special.gamma(q.s)
        lo = _heat_value(q, float(rv), nodes - 8) / special.gamma(q.s)
        val = hi
        if not q.grounded:
            val += q.m ** (-2.0 * q.s) / q.model.volume
        out.append(KernelValue(float(val), HEAT_INTEGRAL, float(abs(hi - lo)), {"nodes": nodes}))
    return out


def heat_integral_green(basis: SpectralBasis, q: KernelQuery, x, y, nodes: int = 24) -> KernelValue:
    """Heat-integral route at the points ``x`` and ``y``."""
    if basis.model != q.model:
        raise ValueError("basis and query live on different models")
    return heat_integral_radial(q, geodesic_distance(q.model, x, y), nodes)[0]


# ---------------------------------------------------------------------------
# closed forms and dispatch

def has_closed_form(q: KernelQuery) -> bool:
    k = q.model.kind
    if k == CIRCLE:
        return (q.s == 1 and q.m > 0) or (q.m == 0 and q.grounded and float(q.s).is_integer())
    if k in (SPHERE2, SPHERE3):
        return q.m == 0 and q.grounded and q.s in (1, 2)
    return k in (EUCLIDEAN, HYPERBOLIC3)


def closed_form_radial(q: KernelQuery, r) -> list[KernelValue]:
    if not has_closed_form(q):
        raise ValueError(f"no closed form for {q}")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    k = q.model.kind
    if k == CIRCLE and q.m > 0:
        v = torus_green(q.m, r)
        if q.grounded:
            v = v - q.m ** -2.0
    elif k == CIRCLE:
        v = torus_green_grounded(int(q.s), r)
    elif k in (SPHERE2, SPHERE3):
        v = sphere_green_grounded(q.model, int(q.s), r)
    elif k == HYPERBOLIC3:
        v = np.array([hyperbolic3_green(q.s, q.m, x) for x in r])
    else:
        v = np.array([euclidean_green(q.n, q.s, q.m, x) for x in r])
    v = np.atleast_1d(v)
    return [KernelValue(float(x), CLOSED_FORM, 0.0) for x in v]


def kernel_radial(q: KernelQuery, r, method: str = CLOSED_FORM, **kw) -> list[KernelValue]:
    """Evaluate ``G`` (or the grounded kernel) at distances ``r`` by one route."""
    if method == CLOSED_FORM:
        return closed_form_radial(q, r)
    if method == EIGEN_SERIES:
        return series_green_radial(q, r, **kw)
    if method == HEAT_INTEGRAL:
        return heat_integral_radial(q, r, **kw)
    raise ValueError(f"unknown method {method!r}")


def theta(basis: SpectralBasis | None, q: KernelQuery) -> float:
    """Pointwise variance ``G(x, x)`` of the field with kernel ``q``.

    With a basis the partial sum over its complete degrees is returned (the
    variance of the truncated field); without one the tail rule is used.
    """
    if not q.pointwise:
        raise DivergentKernel("theta needs s > n/2")
    if basis is None:
        return series_green_radial(q, 0.0)[0].value
    return series_green_radial(q, 0.0, L_max=basis.complete_degree)[0].value


def default_ell(q: KernelQuery, rel_tol: float = 1e-4) -> int:
    """Truncation with neglected variance below ``rel_tol * theta`` (complete degrees)."""
    th = theta(None, q)
    L = series_degree(q.model, q.s, q.m, rel_tol * th)
    return degree_count(q.model, L)
