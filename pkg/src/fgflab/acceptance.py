"""Acceptance criteria 1-11, shared by ``fgflab verify`` and the test suite.

Each criterion returns a :class:`CriterionResult` holding the measured
values, the target, the tolerance and a pass flag.  Monte Carlo criteria on
the circle share two sampling passes (``s = 1`` with ``m = 1`` and with
``m = 0`` grounded), cached per suite run.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate

from ._runtime import STREAM_FIELD, version_string
from .diffusion import (
    TrigField, chi_square, mixing_time, occupation, simulate_direct, simulate_timechange, weighted_ks,
)
from .fgf import circle_fourier, coefficient_scale, fold_to_grid, noise_block, sample_field
from .green_kernels import (
    CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL, KernelQuery, asymptotic_profile, default_ell,
    euclidean_green, euclidean_green_bessel, euclidean_green_increment, has_closed_form,
    hyperbolic3_green, kernel_radial, series_green_radial,
)
from .montecarlo import mc_samples, summarize
from .noise_geometry import NoiseMetric, covering_profile, dudley_bound, dudley_mesh_term
from .spectral_basis import ManifoldModel, eigen_data, random_points
from .spectral_gap import GapConfig, assemble, log_gap_deviation_mc, spectral_gap

DEFAULT_SEED = 42

SUITES = {
    "kernels": (1, 2, 3, 4),
    "fgf": (5,),
    "noise": (6, 7),
    "geometry": (8,),
    "gap": (9,),
    "diffusion": (10,),
    "determinism": (11,),
}


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    target: str
    tolerance: str
    measured: dict
    checks: dict = field(default_factory=dict)
    note: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.id:2d} {self.name}: {self.summary()}"

    def summary(self) -> str:
        failed = [k for k, v in self.checks.items() if v is False]
        if not failed:
            return f"all {len(self.checks)} checks pass"
        return f"failed checks: {', '.join(failed)}"

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("seconds")
        return d


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


class SuiteContext:
    """Seed, thread cap and the cached circle sampling passes of one run."""

    def __init__(self, seed: int = DEFAULT_SEED, threads: int = 1, scale: float = 1.0):
        self.seed = int(seed)
        self.threads = int(threads)
        self.scale = float(scale)
        self._passes: dict = {}

    def n(self, full: int, minimum: int = 100) -> int:
        """Replicate count, shrunk by ``scale`` for quick runs (never below ``minimum``)."""
        return max(minimum, int(round(full * self.scale)))

    def circle_pass(self, m: float, grounded: bool, n: int):
        key = (m, grounded, n)
        if key not in self._passes:
            self._passes[key] = circle_s1_pass(m, grounded, n, self.seed, self.threads)
        return self._passes[key]


# ---------------------------------------------------------------------------
# shared circle pass (s = 1)

CIRCLE = ManifoldModel.circle()
GRID = 1024
COV_POINTS = 16
RHO_OFFSETS = (1, 16, 64, 256, 512)  # grid offsets for noise-distance MC
# At offset 1 the truncation bias of rho^2 (about 2/(pi^2 K) for K kept
# frequencies) is several SE at 10^5 replicates; it is reported, not asserted.
RHO_ASSERTED = (16, 64, 256, 512)


@dataclass
class CirclePass:
    ell: int
    rows: np.ndarray
    scale1: float

    # column layout
    @staticmethod
    def cols():
        c = {}
        i = 0
        for name, width in (("cov", COV_POINTS), ("pair1", 1), ("rho", len(RHO_OFFSETS)),
                            ("vol", 1), ("length", 1), ("dist", 1), ("sup", 1), ("inf", 1),
                            ("sandwich", 1)):
            c[name] = slice(i, i + width)
            i += width
        return c

    def col(self, name: str) -> np.ndarray:
        v = self.rows[:, self.cols()[name]]
        return v[:, 0] if v.shape[1] == 1 else v


def _circle_block(ell, m, grounded, seed, start, count):
    basis = eigen_data(CIRCLE, ell)
    scale = coefficient_scale(basis, 1.0, m, grounded)
    xi = noise_block(ell, seed, start, count, STREAM_FIELD)
    c = xi * scale
    z = circle_fourier(c)
    h = fold_to_grid(z, GRID)
    hm = fold_to_grid(z, GRID, offset=0.5)
    cov = h[:, :: GRID // COV_POINTS]
    pair1 = c[:, 1:2]
    rho = np.column_stack([(h[:, 0] - h[:, k]) ** 2 for k in RHO_OFFSETS])
    e = np.exp(h)
    vol = e.mean(axis=1)
    length = np.exp(hm).mean(axis=1)
    seg = 0.5 * (e + np.roll(e, -1, axis=1)) / GRID
    q = GRID // 4  # distance between x = 0 and y = 1/4
    inner = seg[:, :q].sum(axis=1)
    dist = np.minimum(inner, seg.sum(axis=1) - inner)
    sup = h.max(axis=1)
    inf = h.min(axis=1)
    base = q / GRID
    ok = (np.exp(inf) * base * (1 - 1e-12) <= dist) & (dist <= np.exp(sup) * base * (1 + 1e-12))
    return np.column_stack([cov, pair1, rho, vol, length, dist, sup, inf, ok.astype(float)])


def circle_s1_pass(m: float, grounded: bool, n: int, seed: int, threads: int) -> CirclePass:
    q = KernelQuery(CIRCLE, 1.0, m, grounded)
    ell = default_ell(q)
    rows = mc_samples(lambda sd, a, k: _circle_block(ell, m, grounded, sd, a, k), n, seed,
                      block=128, threads=threads)
    scale1 = float(coefficient_scale(eigen_data(CIRCLE, ell), 1.0, m, grounded)[1])
    return CirclePass(ell, rows, scale1)


def _truncated_kernel(q: KernelQuery, ell: int, r) -> np.ndarray:
    L = eigen_data(q.model, ell).complete_degree
    return np.array([v.value for v in series_green_radial(q, r, L_max=L)])


# ---------------------------------------------------------------------------
# criterion 1: kernel routes

def _random_query(model, rng):
    if model.kind == "circle":
        s = int(rng.choice([1, 2, 3]))
        if s == 1 and rng.random() < 0.5:
            m = float(rng.uniform(0.2, 3.0))
            return KernelQuery(model, s, m, bool(rng.random() < 0.3))
        return KernelQuery(model, s, 0.0, True)
    return KernelQuery(model, int(rng.choice([1, 2])), 0.0, True)


def criterion_1(ctx: SuiteContext) -> CriterionResult:
    rng = np.random.default_rng([ctx.seed, 1])
    worst = {}
    n_queries = 50
    for model in (ManifoldModel.circle(), ManifoldModel.sphere2(), ManifoldModel.sphere3()):
        dmax = 0.0
        for _ in range(n_queries):
            q = _random_query(model, rng)
            assert has_closed_form(q)
            r = float(rng.uniform(0.0, model.diameter))
            if q.pointwise and rng.random() < 0.1:
                r = 0.0
            vals = {meth: kernel_radial(q, r, meth)[0].value for meth in (CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL)}
            scale = max(1.0, abs(vals[CLOSED_FORM]))
            d = max(abs(vals[a] - vals[b]) for a in vals for b in vals) / scale
            dmax = max(dmax, d)
        worst[model.name] = dmax
    exact = {}
    for s, target in ((2, Fraction(-7, 1440)), (3, Fraction(-31, 120960))):
        q = KernelQuery(CIRCLE, s, 0.0, True)
        exact[f"s={s}"] = {
            "target": float(target),
            "closed_form": kernel_radial(q, 0.5, CLOSED_FORM)[0].value,
            "eigen_series": kernel_radial(q, 0.5, EIGEN_SERIES)[0].value,
            "heat_integral": kernel_radial(q, 0.5, HEAT_INTEGRAL)[0].value,
        }
    checks = {f"routes_{k}": v <= 1e-6 for k, v in worst.items()}
    for k, v in exact.items():
        checks[f"exact_{k}"] = all(abs(v[m] - v["target"]) <= 1e-6 for m in (CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL))
    return CriterionResult(1, "kernel route agreement", all(checks.values()),
                           "closed form = eigen series = heat integral", "1e-6 (relative to max(1,|G|))",
                           {"max_route_difference": worst, "torus_constants": exact}, checks)


# ---------------------------------------------------------------------------
# criterion 2: Euclidean relations and asymptotics

def criterion_2(ctx: SuiteContext) -> CriterionResult:
    rng = np.random.default_rng([ctx.seed, 2])
    worst = {"scaling": 0.0, "dimension_shift": 0.0, "recursion": 0.0}
    for _ in range(200):
        n = int(rng.integers(1, 5))
        s = float(rng.uniform(0.3, 4.0))
        m = float(rng.uniform(0.2, 3.0))
        r = float(rng.uniform(0.05, 3.0))
        a = float(rng.uniform(0.3, 3.0))
        G = lambda nn, ss, mm, rr: euclidean_green(nn, ss, mm, rr)
        lhs = G(n, s, a * m, r)
        rhs = a ** (n - 2 * s) * G(n, s, m, a * r)
        worst["scaling"] = max(worst["scaling"], abs(lhs - rhs) / max(abs(lhs), 1e-300))
        b = float(rng.uniform(-0.9 * s, 0.9 * n / 2))
        lhs = G(n, s + b, m, r)
        rhs = (2 * math.pi) ** (-b) * math.exp(math.lgamma(s) - math.lgamma(s + b)) * G(n - 2 * b, s, m, r)
        worst["dimension_shift"] = max(worst["dimension_shift"], abs(lhs - rhs) / max(abs(lhs), 1e-300))
        s1 = s + 1.0
        lhs = s1 * m * m * G(n, s1 + 1, m, r)
        rhs = (s1 - n / 2) * G(n, s1, m, r) + r * r / (2 * (s1 - 1)) * G(n, s1 - 1, m, r)
        worst["recursion"] = max(worst["recursion"], abs(lhs - rhs) / max(abs(lhs), 1e-300))
    r0 = 1e-3
    asym = {}
    for n, s in ((1, 2.0), (2, 2.0), (3, 2.0), (3, 1.6)):
        expo, const, log_flag = asymptotic_profile(n, s, 1.0)
        diff = euclidean_green_increment(n, s, 1.0, r0)
        profile = const * r0**expo * (math.log(1.0 / r0) if log_flag else 1.0)
        asym[f"n={n},s={s}"] = {"ratio": diff / profile, "log_case": log_flag, "exponent": expo,
                                "constant": const}
    checks = {f"relation_{k}": v <= 1e-8 for k, v in worst.items()}
    for k, v in asym.items():
        checks[f"asymptotic_{k}"] = abs(v["ratio"] - 1.0) <= 0.02
    note = ("In the log case s = n/2 + 1 the next term of G(0) - G(r) is C r^2 times a constant "
            "(for m = 1, n = 2: log(sqrt 2) - gamma + 1/2), so the relative deviation at r = 1e-3 is "
            "about 0.27/log(1000) = 3.9%; the 2% target needs r below about 1e-6. Reported, not loosened.")
    return CriterionResult(2, "Euclidean relations and asymptotics", all(checks.values()),
                           "relations exact; asymptotic ratio -> 1", "1e-8 relative; 2% at r=1e-3 (m=1)",
                           {"max_relative_error": worst, "asymptotics_r=1e-3": asym}, checks, note)


# ---------------------------------------------------------------------------
# criterion 3: mass identities

def _mass(q: KernelQuery, method: str) -> float:
    model = q.model
    if method == CLOSED_FORM:
        f = lambda r: kernel_radial(q, r, CLOSED_FORM)[0].value
        # tolerances sit at the roundoff floor; the check is against 1e-8
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            if model.kind == "circle":
                return 2.0 * integrate.quad(f, 0.0, 0.5, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
            return integrate.quad(lambda r: f(r) * 2 * math.pi * math.sin(r), 0.0, math.pi,
                                  epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    # Gauss-Legendre over the radial variable with the vectorised series
    if model.kind == "circle":
        x, w = np.polynomial.legendre.leggauss(256)
        r = 0.25 * (x + 1.0)
        return 0.5 * float(np.dot(w, [v.value for v in kernel_radial(q, r, method)]))
    u, w = np.polynomial.legendre.leggauss(512)
    return 2 * math.pi * float(np.dot(w, [v.value for v in kernel_radial(q, np.arccos(u), method)]))


def criterion_3(ctx: SuiteContext) -> CriterionResult:
    C, S = ManifoldModel.circle(), ManifoldModel.sphere2()
    cases = [
        (KernelQuery(C, 1, 1.0), CLOSED_FORM), (KernelQuery(C, 1, 1.0, True), CLOSED_FORM),
        (KernelQuery(C, 2, 0.0, True), CLOSED_FORM), (KernelQuery(C, 2, 0.7), EIGEN_SERIES),
        (KernelQuery(C, 2, 0.7, True), EIGEN_SERIES),
        (KernelQuery(S, 1, 0.0, True), CLOSED_FORM), (KernelQuery(S, 2, 0.0, True), CLOSED_FORM),
        (KernelQuery(S, 2, 1.0), EIGEN_SERIES), (KernelQuery(S, 2, 0.7, True), EIGEN_SERIES),
    ]
    measured, checks = {}, {}
    for q, meth in cases:
        target = 0.0 if q.grounded else q.m ** (-2 * q.s)
        v = _mass(q, meth)
        key = f"{q.model.name},s={q.s},m={q.m},{'grounded' if q.grounded else 'full'},{meth}"
        measured[key] = {"integral": v, "target": target}
        checks[key] = abs(v - target) <= 1e-8
    return CriterionResult(3, "mass identities", all(checks.values()),
                           "int G = m^{-2s}; int grounded G = 0", "1e-8 absolute", measured, checks)


# ---------------------------------------------------------------------------
# criterion 4: hyperbolic closed forms

def criterion_4(ctx: SuiteContext) -> CriterionResult:
    rng = np.random.default_rng([ctx.seed, 4])
    worst = 0.0
    pts = []
    for _ in range(20):
        s = int(rng.choice([1, 2]))
        m = float(rng.uniform(0.1, 3.0))
        r = float(rng.uniform(0.01, 5.0))
        k = math.sqrt(2 * m * m + 1)
        if s == 1:
            ref = math.exp(-k * r) / (2 * math.pi * math.sinh(r))
        else:
            ref = r * math.exp(-k * r) / (2 * math.pi * k * math.sinh(r))
        v = hyperbolic3_green(s, m, r)
        err = abs(v - ref) / abs(ref)
        worst = max(worst, err)
        pts.append({"s": s, "m": m, "r": r, "value": v, "display": ref})
    return CriterionResult(4, "hyperbolic closed forms", worst <= 1e-10,
                           "hyperbolic3_green = explicit s=1, s=2 displays", "1e-10 relative",
                           {"max_relative_error": worst, "points": pts}, {"hyperbolic_displays": worst <= 1e-10})


# ---------------------------------------------------------------------------
# criterion 5: FGF covariance and pairing variance

def criterion_5(ctx: SuiteContext) -> CriterionResult:
    N = ctx.n(100_000)
    cp = ctx.circle_pass(1.0, False, N)
    q = KernelQuery(CIRCLE, 1.0, 1.0)
    h = cp.col("cov")
    hc = h - h.mean(axis=0)
    x = np.arange(COV_POINTS) / COV_POINTS
    worst_z = 0.0
    for i in range(COV_POINTS):
        prods = hc[:, i:i + 1] * hc[:, i:]
        emp = prods.sum(axis=0) / (N - 1)
        se = prods.std(axis=0, ddof=1) / math.sqrt(N)
        ker = _truncated_kernel(q, cp.ell, np.abs(x[i:] - x[i]))
        worst_z = max(worst_z, float(np.max(np.abs(emp - ker) / se)))
    c1 = cp.col("pair1")
    sq = (c1 - c1.mean()) ** 2
    var_target = (1.0 + 0.5 * (2 * math.pi) ** 2) ** -1.0
    pv = summarize("pairing_variance", sq * N / (N - 1), ctx.seed, reference=var_target)
    z_pair = abs(pv.estimate - var_target) / pv.se
    checks = {"covariance_within_4se": worst_z <= 4.0, "pairing_variance_within_3se": z_pair <= 3.0}
    return CriterionResult(5, "FGF covariance", all(checks.values()),
                           "Cov(h(x),h(y)) = truncated G; Var<h,phi_1> = (m^2+lambda_1/2)^{-s}",
                           "4 SE (136 entries); 3 SE",
                           {"N": N, "ell": cp.ell, "max_cov_z": worst_z, "pairing_variance": pv.to_dict(False),
                            "pairing_z": z_pair}, checks)


# ---------------------------------------------------------------------------
# criterion 6: noise distance

def criterion_6(ctx: SuiteContext) -> CriterionResult:
    q = KernelQuery(CIRCLE, 1.0, 0.0, True)
    nm = NoiseMetric(q)
    r = np.linspace(0.0, 1.0, 1001)
    closed_err = float(np.max(np.abs(nm.radial(r) ** 2 - 2 * r * (1 - r))))
    N = ctx.n(100_000)
    cp = ctx.circle_pass(0.0, True, N)
    mc = {}
    worst_z = 0.0
    for k, col in zip(RHO_OFFSETS, cp.col("rho").T):
        rr = k / GRID
        rep = summarize(f"rho2_r={rr}", col, ctx.seed, reference=2 * rr * (1 - rr))
        z = abs(rep.estimate - rep.reference) / rep.se
        if k in RHO_ASSERTED:
            worst_z = max(worst_z, z)
        trunc = 2 * (_truncated_kernel(q, cp.ell, 0.0)[0] - _truncated_kernel(q, cp.ell, rr)[0])
        mc[f"r={rr}"] = {"mean": rep.estimate, "se": rep.se, "target": rep.reference, "z": z,
                         "truncated_target": trunc, "z_truncated": abs(rep.estimate - trunc) / rep.se,
                         "asserted": k in RHO_ASSERTED}
    # triangle inequality on random triples
    rng = np.random.default_rng([ctx.seed, 6])
    tri = {}
    for label, model, qq in (("circle s=1 m=0", CIRCLE, q),
                             ("circle s=2 m=1", CIRCLE, KernelQuery(CIRCLE, 2.0, 1.0)),
                             ("circle s=1 m=1", CIRCLE, KernelQuery(CIRCLE, 1.0, 1.0)),
                             ("sphere2 s=2 m=0", ManifoldModel.sphere2(), KernelQuery(ManifoldModel.sphere2(), 2, 0.0, True)),
                             ("sphere3 s=2 m=0", ManifoldModel.sphere3(), KernelQuery(ManifoldModel.sphere3(), 2, 0.0, True))):
        metric = NoiseMetric(qq)
        n3 = 10_000
        x, y, z = (random_points(model, n3, rng) for _ in range(3))
        from .spectral_basis import geodesic_distance
        dxy = metric.radial(geodesic_distance(model, x, y))
        dyz = metric.radial(geodesic_distance(model, y, z))
        dxz = metric.radial(geodesic_distance(model, x, z))
        viol = float(np.max(dxz - dxy - dyz))
        tri[label] = {"max_violation": viol, "ok": viol <= 1e-12}
    # monotonicity of (lambda_1/2)^s rho^2_{s,0}
    mono = {}
    for model, svals, lam1 in ((CIRCLE, (1.0, 1.5, 2.0, 3.0), 4 * math.pi ** 2),
                               (ManifoldModel.sphere2(), (1.5, 2.0, 2.5, 3.0), 2.0)):
        rs = np.array([0.05, 0.2, 0.4]) * (1.0 if model.kind == "circle" else math.pi)
        vals = np.array([(lam1 / 2) ** s * NoiseMetric(KernelQuery(model, s, 0.0, True)).radial(rs) ** 2
                         for s in svals])
        ok = bool(np.all(np.diff(vals, axis=0) <= 1e-10))
        mono[model.name] = {"s": list(svals), "r": rs.tolist(), "values": vals.tolist(), "ok": ok}
    checks = {"closed_form_1e-10": closed_err <= 1e-10, "mc_within_3se": worst_z <= 3.0}
    checks.update({f"triangle_{k}": v["ok"] for k, v in tri.items()})
    checks.update({f"monotone_{k}": v["ok"] for k, v in mono.items()})
    return CriterionResult(6, "noise distance", all(checks.values()),
                           "rho^2_{1,0}(0,r) = 2r(1-r); triangle inequality; (lambda_1/2)^s rho^2 nonincreasing in s",
                           "1e-10; 3 SE; exact",
                           {"closed_form_max_error": closed_err, "N": N, "ell": cp.ell, "mc": mc,
                            "triangle": tri, "monotonicity": mono}, checks)


# ---------------------------------------------------------------------------
# criterion 7: Dudley

def criterion_7(ctx: SuiteContext) -> CriterionResult:
    q = KernelQuery(CIRCLE, 1.0, 0.0, True)
    nm = NoiseMetric(q)
    grid = np.arange(GRID) / GRID
    prof = covering_profile(nm, grid)
    bound = dudley_bound(prof)
    N = ctx.n(10_000)
    cp = ctx.circle_pass(0.0, True, ctx.n(100_000))
    sup = summarize("sup_h", cp.col("sup")[:N], ctx.seed)
    ok = sup.estimate <= bound
    mono_ok = bool(np.all(np.diff(prof.counts) >= 0))  # eps descending, counts ascending
    checks = {"mc_sup_below_dudley": ok, "covering_monotone": mono_ok,
              "covering_bracket": bool(np.all(prof.lower <= prof.counts))}
    return CriterionResult(7, "Dudley bound", all(checks.values()),
                           "E[sup h] <= 24 int sqrt(log N(eps)) d eps", "one-sided, exact",
                           {"N": N, "mc_sup": sup.to_dict(False), "dudley_bound": bound,
                            "sub_mesh_term": dudley_mesh_term(prof), "greedy_centres": int(prof.radii.size),
                            "diameter": prof.diameter, "mesh": prof.mesh}, checks)


# ---------------------------------------------------------------------------
# criterion 8: random geometry

def criterion_8(ctx: SuiteContext) -> CriterionResult:
    N = ctx.n(100_000)
    measured, checks = {}, {}
    for m, grounded in ((1.0, False), (0.0, True)):
        cp = ctx.circle_pass(m, grounded, N)
        q = KernelQuery(CIRCLE, 1.0, m, grounded)
        th = float(_truncated_kernel(q, cp.ell, 0.0)[0])
        ref = math.exp(th / 2)
        vol = summarize("volume", cp.col("vol"), ctx.seed, reference=ref)
        length = summarize("length", cp.col("length"), ctx.seed, reference=ref)
        dist = summarize("distance", cp.col("dist"), ctx.seed)
        sup = summarize("sup_h", cp.col("sup"), ctx.seed)
        base = 0.25
        label = f"m={m}"
        measured[label] = {"theta": th, "reference": ref, "volume": vol.to_dict(False),
                           "length": length.to_dict(False), "distance": dist.to_dict(False),
                           "sup_h": sup.to_dict(False), "sandwich_rate": float(cp.col("sandwich").mean()),
                           "distance_upper": ref * base, "distance_lower": base * math.exp(-sup.estimate)}
        checks[f"{label}_volume_3se"] = vol.within(ref)
        checks[f"{label}_length_3se"] = length.within(ref)
        checks[f"{label}_sandwich_all"] = bool(np.all(cp.col("sandwich") == 1.0))
        checks[f"{label}_distance_upper"] = dist.estimate - dist.se <= ref * base
        checks[f"{label}_distance_lower"] = dist.estimate + dist.se >= base * math.exp(-(sup.estimate + sup.se))
    return CriterionResult(8, "random geometry expectations", all(checks.values()),
                           "E vol = E L = e^{theta/2}; sandwich pathwise; e^{theta/2} d >= E d >= d e^{-E sup h}",
                           "3 SE; 100%; within 1 SE", {"N": N, **measured}, checks)


# ---------------------------------------------------------------------------
# criterion 9: spectral gap

def criterion_9(ctx: SuiteContext) -> CriterionResult:
    lam = spectral_gap(assemble(None, 1024)).lambda1
    rel = abs(lam / (4 * math.pi ** 2) - 1)
    N = ctx.n(1000)
    mc = log_gap_deviation_mc(GapConfig(s=2.0, m=1.0), N, ctx.seed, threads=ctx.threads)
    checks = {"unperturbed_0.1pct": rel <= 1e-3, "sandwich_all": mc.pass_rate == 1.0,
              "log_deviation_inequality": mc.inequality_holds}
    return CriterionResult(9, "spectral gap", all(checks.values()),
                           "lambda_1 -> 4 pi^2; sandwich pathwise; E|log ratio| <= 2 (E sup|h| + 3 SE)",
                           "0.1%; 100%; one-sided",
                           {"lambda1_M1024": lam, "relative_error": rel, "N": N, **mc.to_dict(False)}, checks)


# ---------------------------------------------------------------------------
# criterion 10: diffusion

def criterion_10(ctx: SuiteContext) -> CriterionResult:
    n_paths = ctx.n(10_000)
    q = KernelQuery(CIRCLE, 3.0, 1.0)
    ell = default_ell(q)
    fld = sample_field(eigen_data(CIRCLE, ell), 3.0, 1.0, seed=ctx.seed, replicate=0)
    tf = TrigField.from_field(fld)
    T, dt = 1.0, 1e-4
    direct = simulate_direct(tf, 0.0, T, dt, n_paths, ctx.seed, threads=ctx.threads)
    tc = simulate_timechange(tf, 0.0, T, dt, n_paths, ctx.seed, threads=ctx.threads)
    ks = weighted_ks(direct.final, tc.final, None, tc.final_weights)
    # stationarity: independent paths from the uniform law, run past the mixing horizon
    Tm = math.ceil(mixing_time(tf) / 0.01) * 0.01
    bins = 32
    occ_paths = simulate_direct(tf, "uniform", Tm, 1e-4, n_paths, ctx.seed + 1, bins=bins, threads=ctx.threads)
    occ = occupation(occ_paths, bins)
    chi = chi_square(occ.mass, tf.bin_masses(bins))
    checks = {"ks_below_0.03": ks < 0.03, "occupation_chi2_1pct": chi.passed}
    return CriterionResult(10, "diffusion constructions", all(checks.values()),
                           "weighted time-change X_T ~ direct X_T; occupation ~ e^h/Z",
                           "KS < 0.03; chi^2 p >= 0.01",
                           {"paths": n_paths, "ell": ell, "field_a": tf.a.tolist(), "field_b": tf.b.tolist(),
                            "ks": ks, "ess": tc.ess, "occupation_T": Tm, "chi2": asdict(chi)}, checks)


CRITERIA: dict[int, Callable[[SuiteContext], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


# ---------------------------------------------------------------------------
# suite runner

def select(suite: str) -> list[int]:
    """Criterion ids for ``all``, a suite name, or a comma list of ids / names."""
    out: list[int] = []
    for part in str(suite).split(","):
        part = part.strip()
        if not part:
            continue
        if part == "all":
            out += list(range(1, 12))
        elif part in SUITES:
            out += list(SUITES[part])
        elif part.isdigit() and 1 <= int(part) <= 11:
            out.append(int(part))
        else:
            raise ValueError(f"unknown suite {part!r}; choose all, {', '.join(SUITES)} or ids 1-11")
    return sorted(set(out))


def _digest(results: list[CriterionResult]) -> str:
    blob = json.dumps([_jsonable(r.to_dict(False)) for r in results], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def run_criteria(ids, seed: int = DEFAULT_SEED, threads: int = 1, scale: float = 1.0,
                 progress: Callable[[CriterionResult], None] | None = None) -> list[CriterionResult]:
    ctx = SuiteContext(seed, threads, scale)
    results = []
    for i in ids:
        t0 = time.perf_counter()
        res = CRITERIA[i](ctx)
        res.measured = _jsonable(res.measured)
        res.checks = {k: bool(v) for k, v in res.checks.items()}
        res.passed = bool(res.passed)
        res.seconds = time.perf_counter() - t0
        results.append(res)
        if progress:
            progress(res)
    return results


def criterion_11(first: list[CriterionResult], seed: int, threads: int, scale: float,
                 progress=None) -> CriterionResult:
    """Re-run the other selected criteria with another thread count and compare digests."""
    ids = [r.id for r in first]
    other = max(2, threads if threads > 1 else 4) if threads == 1 else 1
    t0 = time.perf_counter()
    second = run_criteria(ids, seed, other, scale)
    d1, d2 = _digest(first), _digest(second)
    per = {str(a.id): _digest([a]) == _digest([b]) for a, b in zip(first, second)}
    res = CriterionResult(11, "determinism", d1 == d2 and bool(ids),
                          "bit-identical reports across runs and thread counts", "exact",
                          {"criteria": ids, "threads": [threads, other], "digest_first": d1,
                           "digest_second": d2, "per_criterion": per},
                          {"identical_reports": d1 == d2, "nonempty": bool(ids)})
    res.seconds = time.perf_counter() - t0
    if progress:
        progress(res)
    return res


@dataclass
class SuiteReport:
    version: str
    seed: int
    threads: int
    suite: str
    results: list[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self, timing: bool = False) -> dict:
        return {"version": self.version, "seed": self.seed, "threads": self.threads, "suite": self.suite,
                "passed": self.passed, "criteria": [r.to_dict(timing) for r in self.results]}


def run_suite(suite: str = "all", seed: int = DEFAULT_SEED, threads: int = 1, scale: float = 1.0,
              progress=None) -> SuiteReport:
    ids = select(suite)
    base_ids = [i for i in ids if i != 11]
    results = run_criteria(base_ids, seed, threads, scale, progress)
    if 11 in ids:
        # determinism needs something to compare; use the full set when run alone
        first = results if base_ids else run_criteria(list(range(1, 11)), seed, threads, scale)
        results.append(criterion_11(first, seed, threads, scale, progress))
    return SuiteReport(version_string(), seed, threads, suite, results)
