"""Spectral gap of the conformally perturbed Laplacian on the circle.

For ``n = 1`` the Dirichlet energy carries the weight ``e^{-h}`` and the
reference measure the density ``e^{h}``.  Linear finite elements on a periodic
grid with midpoint stiffness weights and a lumped mass give the pencil
``K u = lambda D u``; eigenvalues follow the ``-Delta`` convention, so the
unperturbed gap tends to ``4 pi^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, eigh

from ._runtime import STREAM_FIELD
from .fgf import FieldRealization, circle_grid_values, coefficient_scale, noise_block
from .green_kernels import KernelQuery, default_ell, theta
from .montecarlo import MonteCarloReport, mc_samples, summarize
from .spectral_basis import CIRCLE, ManifoldModel, eigen_data

GAP_RTOL = 1e-9
BLOCK = 4
MAX_ITER = 1000


def alpha_exponent(n: int) -> float:
    """Sandwich exponent: 2 on the circle, ``2(n-1)`` from dimension two on."""
    return 2.0 if n == 1 else 2.0 * (n - 1)


@dataclass(frozen=True, eq=False)
class DiscreteForm:
    """Periodic P1 stiffness and lumped mass of one field on ``M`` cells.

    ``edge_weight[i]`` multiplies the cell ``[x_i, x_{i+1}]`` and ``mass[i]`` is
    the lumped mass of node ``i``.  The stiffness is ``M * w_i`` on each cell.
    """

    M: int
    edge_weight: np.ndarray
    mass: np.ndarray
    h_nodes: np.ndarray | None = None
    h_mid: np.ndarray | None = None

    def __post_init__(self):
        if self.M < 64 or self.M & (self.M - 1):
            raise ValueError("M must be a power of two and at least 64")
        if self.edge_weight.shape != (self.M,) or self.mass.shape != (self.M,):
            raise ValueError("weights must have one entry per cell / node")
        if np.any(self.mass <= 0) or np.any(self.edge_weight <= 0):
            raise ValueError("weights must be positive")

    @property
    def cell_stiffness(self) -> np.ndarray:
        return self.M * self.edge_weight

    def stiffness_dense(self) -> np.ndarray:
        k = self.cell_stiffness
        M = self.M
        K = np.zeros((M, M))
        i = np.arange(M)
        j = (i + 1) % M
        np.add.at(K, (i, i), k)
        np.add.at(K, (j, j), k)
        np.add.at(K, (i, j), -k)
        np.add.at(K, (j, i), -k)
        return K

    def apply_stiffness(self, u: np.ndarray) -> np.ndarray:
        """``K u`` for a vector or the columns of a matrix."""
        k = self.cell_stiffness
        if u.ndim == 2:
            k = k[:, None]
        du = np.roll(u, -1, axis=0) - u          # u_{i+1} - u_i on cell i
        flux = k * du
        return np.roll(flux, 1, axis=0) - flux   # flux_{i-1} - flux_i

    def energy(self, u: np.ndarray) -> float:
        return float(np.sum(self.cell_stiffness * (np.roll(u, -1) - u) ** 2))

    def scaled_mass(self, c: float) -> "DiscreteForm":
        return DiscreteForm(self.M, self.edge_weight, c * self.mass, self.h_nodes, self.h_mid)

    @property
    def sup_abs_h(self) -> float:
        if self.h_nodes is None:
            return 0.0
        return float(max(np.abs(self.h_nodes).max(), np.abs(self.h_mid).max()))

    @property
    def modulus(self) -> float:
        """Largest change of ``h`` between a node and an adjacent midpoint."""
        if self.h_nodes is None:
            return 0.0
        return float(max(np.abs(self.h_mid - self.h_nodes).max(),
                         np.abs(np.roll(self.h_nodes, -1) - self.h_mid).max()))


def assemble_values(h_nodes: np.ndarray, h_mid: np.ndarray, n: int = 1) -> DiscreteForm:
    M = h_nodes.size
    return DiscreteForm(M, np.exp((n - 2) * h_mid), np.exp(n * h_nodes) / M,
                        np.asarray(h_nodes, float), np.asarray(h_mid, float))


def assemble(field: FieldRealization | None, M: int) -> DiscreteForm:
    """Form of ``field`` (``None`` for the unperturbed circle) on ``M`` cells."""
    if field is None:
        z = np.zeros(M)
        return assemble_values(z, z)
    if field.model.kind != CIRCLE:
        raise ValueError("the perturbed form is assembled on the circle")
    v = circle_grid_values(field.coefficients, 2 * M)
    return assemble_values(v[0::2], v[1::2])


def constant_form(c: float, M: int) -> DiscreteForm:
    z = np.full(M, float(c))
    return assemble_values(z, z)


# ---------------------------------------------------------------------------
# eigen-solve

class _PinnedSolver:
    """Solves ``K x = b`` for ``sum(b) = 0`` with ``x_0 = 0``.

    Removing node 0 leaves a symmetric positive definite tridiagonal matrix,
    factored once by banded Cholesky.
    """

    def __init__(self, form: DiscreteForm):
        k = form.cell_stiffness
        M = form.M
        diag = k + np.roll(k, 1)                 # node i touches cells i-1 and i
        ab = np.zeros((2, M - 1))
        ab[1] = diag[1:]
        ab[0, 1:] = -k[1:M - 1]                  # coupling (i, i+1) for i = 1..M-2
        self.factor = cholesky_banded(ab, lower=False)
        self.M = M

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = np.zeros_like(b)
        x[1:] = cho_solve_banded((self.factor, False), b[1:])
        return x


@dataclass(frozen=True)
class GapSolution:
    lambda0: float
    lambda1: float
    vector: np.ndarray
    residual: float
    iterations: int
    converged: bool


class GapNotConverged(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(msg)
        self.residual = residual


def _project(form: DiscreteForm, X: np.ndarray) -> np.ndarray:
    """Remove the ``D``-weighted mean of each column."""
    w = form.mass / form.mass.sum()
    return X - w @ X


def spectral_gap(form: DiscreteForm, rtol: float = GAP_RTOL, max_iter: int = MAX_ITER,
                 block: int = BLOCK, start: np.ndarray | None = None) -> GapSolution:
    """Smallest nonzero generalized eigenvalue of ``(K, D)``.

    Block inverse iteration on the ``D``-orthogonal complement of constants,
    with a Rayleigh-Ritz step per sweep.  Stops once the relative residual
    ``|K u - lambda D u| / (lambda |D u|)`` falls below ``rtol``.
    """
    M = form.M
    solver = _PinnedSolver(form)
    D = form.mass
    if start is None:
        x = np.arange(M) / M
        cols = [np.cos(2 * np.pi * x), np.sin(2 * np.pi * x),
                np.cos(4 * np.pi * x), np.sin(4 * np.pi * x)]
        k = 3
        while len(cols) < block:
            cols += [np.cos(2 * np.pi * k * x), np.sin(2 * np.pi * k * x)]
            k += 1
        X = np.column_stack(cols[:block])
    else:
        X = np.asarray(start, float).reshape(M, -1)
    X = _project(form, X)
    lam, u, res = np.nan, None, np.inf
    for it in range(1, max_iter + 1):
        Y = _project(form, solver.solve(D[:, None] * X))
        KY = form.apply_stiffness(Y)
        A = Y.T @ KY
        B = Y.T @ (D[:, None] * Y)
        vals, vecs = eigh(0.5 * (A + A.T), 0.5 * (B + B.T))
        X = Y @ vecs
        lam = float(vals[0])
        u = X[:, 0]
        r = form.apply_stiffness(u) - lam * D * u
        res = float(np.linalg.norm(r) / (abs(lam) * np.linalg.norm(D * u)))
        if res < rtol:
            u = u / math.sqrt(float(u @ (D * u)))
            return GapSolution(0.0, lam, u, res, it, True)
        X = X / np.sqrt(np.sum(D[:, None] * X * X, axis=0))
    raise GapNotConverged(f"gap iteration did not converge in {max_iter} sweeps (residual {res:.3g})", res)


def rayleigh_quotient(form: DiscreteForm, u: np.ndarray) -> float:
    """``int |u'|^2 w / int (u - pi u)^2 dmu`` on the grid."""
    v = _project(form, u[:, None])[:, 0]
    return form.energy(v) / float(np.sum(form.mass * v * v))


# ---------------------------------------------------------------------------
# sandwich

@dataclass(frozen=True)
class GapReport:
    lambda0: float
    lambda1: float
    lambda1_base: float
    sup_abs_h: float
    sup_inflated: float
    alpha: float
    passed: bool

    @property
    def ratio(self) -> float:
        return self.lambda1 / self.lambda1_base

    @property
    def bounds(self) -> tuple[float, float]:
        a = self.alpha * self.sup_inflated
        return math.exp(-a), math.exp(a)

    def to_row(self) -> dict:
        return {"lambda1": self.lambda1, "sup_abs_h": self.sup_abs_h, "ratio": self.ratio,
                "pass": int(self.passed)}


def sandwich_check(lambda1: float, lambda1_base: float, form: DiscreteForm, n: int = 1,
                   inflate: bool = True, rtol: float = GAP_RTOL) -> GapReport:
    """``e^{-alpha S} <= lambda1 / lambda1_base <= e^{alpha S}``.

    ``S`` is ``sup |h|`` over nodes and midpoints, plus the largest
    node-to-midpoint change of ``h`` when ``inflate`` is set.  The comparison
    allows the solver tolerance ``rtol`` at each end, which matters only when
    a bound is attained (constant fields).
    """
    alpha = alpha_exponent(n)
    sup = form.sup_abs_h
    S = sup + (form.modulus if inflate else 0.0)
    ratio = lambda1 / lambda1_base
    lo, hi = math.exp(-alpha * S), math.exp(alpha * S)
    ok = lo * (1 - 4 * rtol) <= ratio <= hi * (1 + 4 * rtol)
    return GapReport(0.0, float(lambda1), float(lambda1_base), sup, S, alpha, bool(ok))


def gap_report(field: FieldRealization | None, M: int, base: float | None = None) -> GapReport:
    form = assemble(field, M)
    lam = spectral_gap(form).lambda1
    if base is None:
        base = spectral_gap(assemble(None, M)).lambda1
    return sandwich_check(lam, base, form)


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class GapConfig:
    s: float = 2.0
    m: float = 1.0
    grounded: bool = False
    ell: int | None = None
    M: int = 512
    t: float = 0.05

    @property
    def query(self) -> KernelQuery:
        return KernelQuery(ManifoldModel.circle(), self.s, self.m, self.grounded)

    def resolved(self) -> "GapConfig":
        """Fill in the default truncation (neglected variance below 1e-4 theta)."""
        return self if self.ell is not None else replace(self, ell=default_ell(self.query))


def _relaxation(form: DiscreteForm, t: float) -> tuple[float, float]:
    """``log |P_t f - pi f|`` for ``f = sqrt(2) sin(2 pi x)`` under ``e^{t Delta}`` and ``e^{t Delta/2}``."""
    D = form.mass
    M = form.M
    f = math.sqrt(2.0) * np.sin(2 * np.pi * np.arange(M) / M)
    g = np.sqrt(D) * (f - np.sum(D * f) / D.sum())
    A = form.stiffness_dense() / np.sqrt(np.outer(D, D))
    vals, vecs = np.linalg.eigh(A)
    c = vecs.T @ g
    full = 0.5 * math.log(float(np.sum((np.exp(-t * vals) * c) ** 2)))
    half = 0.5 * math.log(float(np.sum((np.exp(-0.5 * t * vals) * c) ** 2)))
    return full, half


def gap_block(cfg: GapConfig, base: float, seed: int, start: int, count: int,
              relaxation: bool = False) -> np.ndarray:
    """Per-replicate ``[lambda1, sup|h|, |log ratio|, pass, (log relax full, half)]``."""
    basis = eigen_data(ManifoldModel.circle(), cfg.ell)
    scale = coefficient_scale(basis, cfg.s, cfg.m, cfg.grounded)
    xi = noise_block(cfg.ell, seed, start, count, STREAM_FIELD)
    vals = circle_grid_values(xi * scale, 2 * cfg.M)
    rows = []
    for v in vals:
        form = assemble_values(v[0::2], v[1::2])
        lam = spectral_gap(form).lambda1
        rep = sandwich_check(lam, base, form)
        row = [lam, rep.sup_abs_h, abs(math.log(rep.ratio)), float(rep.passed)]
        if relaxation:
            row += list(_relaxation(form, cfg.t))
        rows.append(row)
    return np.array(rows)


@dataclass(frozen=True)
class GapMonteCarlo:
    deviation: MonteCarloReport
    sup: MonteCarloReport
    pass_rate: float
    lambda1_base: float
    alpha: float
    rows: np.ndarray
    relaxation: dict | None = None
    ell: int | None = None

    @property
    def inequality_holds(self) -> bool:
        """``E|log ratio| <= alpha (E sup|h| + 3 SE)``."""
        return self.deviation.estimate <= self.alpha * (self.sup.estimate + 3.0 * self.sup.se)

    def to_dict(self, timing: bool = False) -> dict:
        return {"log_gap_deviation": self.deviation.to_dict(timing), "sup_abs_h": self.sup.to_dict(timing),
                "pass_rate": self.pass_rate, "lambda1_base": self.lambda1_base, "alpha": self.alpha,
                "inequality_holds": self.inequality_holds, "relaxation": self.relaxation,
                "ell": self.ell}


def log_gap_deviation_mc(cfg: GapConfig, n: int, seed: int, threads: int | None = None,
                         relaxation: bool = False, block: int = 32) -> GapMonteCarlo:
    """Monte Carlo of ``E|log lambda1^h - log lambda1|`` against ``alpha E sup|h|``.

    With ``relaxation`` the mean of ``log |P_t f - pi f|`` for ``f = phi_1`` is
    also compared with ``-rate * t * e^{-alpha E sup|h|} + theta/4`` (``n = 1``,
    ``|f| = 1``) for both semigroup normalisations; reported, not asserted.
    """
    if n < 100:
        raise ValueError("need at least 100 replicates")
    cfg = cfg.resolved()
    base = spectral_gap(assemble(None, cfg.M)).lambda1
    rows = mc_samples(lambda sd, a, k: gap_block(cfg, base, sd, a, k, relaxation), n, seed,
                      block=block, threads=threads)
    dev = summarize("abs_log_gap_ratio", rows[:, 2], seed)
    sup = summarize("sup_abs_h", rows[:, 1], seed)
    alpha = alpha_exponent(1)
    relax = None
    if relaxation:
        th = theta(eigen_data(ManifoldModel.circle(), cfg.ell), cfg.query)
        damp = math.exp(-alpha * sup.estimate)
        relax = {}
        for name, col, rate in (("generator_delta", 4, base), ("generator_half_delta", 5, base / 2.0)):
            rep = summarize(f"log_relaxation_{name}", rows[:, col], seed)
            bound = -rate * cfg.t * damp + th / 4.0
            relax[name] = {"mean": rep.estimate, "se": rep.se, "bound": bound,
                           "holds": rep.estimate <= bound + 3 * rep.se}
        relax["t"] = cfg.t
        relax["theta"] = th
    return GapMonteCarlo(dev, sup, float(rows[:, 3].mean()), base, alpha, rows, relax, cfg.ell)
