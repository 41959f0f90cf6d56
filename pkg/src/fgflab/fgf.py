"""Truncated fractional Gaussian fields.

A realization stores the raw standard normals ``xi_j`` and derives the
coefficients ``c_j = xi_j (m^2 + lambda_j/2)^{-s/2}`` on demand, so grounding,
lifting and changes of regularity act on the same underlying noise and are
exactly invertible.  Grounded fields carry ``xi_0 = 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._runtime import STREAM_FIELD, replicate_rng
from .spectral_basis import CIRCLE, ManifoldModel, QuadratureRule, SpectralBasis, eigen_data


def coefficient_scale(basis: SpectralBasis, s: float, m: float, grounded: bool) -> np.ndarray:
    """``(m^2 + lambda_j/2)^{-s/2}``, with the constant mode zeroed when grounded."""
    rates = m * m + 0.5 * basis.eigenvalues
    scale = np.empty(basis.ell)
    scale[1:] = rates[1:] ** (-0.5 * s)
    scale[0] = 0.0 if grounded else rates[0] ** (-0.5 * s)
    return scale


@dataclass(frozen=True, eq=False)
class FieldRealization:
    basis: SpectralBasis
    s: float
    m: float
    grounded: bool
    xi: np.ndarray
    seed: int | None = None
    replicate: int | None = None

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("mass must be nonnegative")
        if self.m == 0 and not self.grounded:
            raise ValueError("massless fields must be grounded")
        xi = np.array(self.xi, dtype=float)
        if xi.shape != (self.basis.ell,):
            raise ValueError("xi must hold one normal per retained eigenpair")
        if self.grounded:
            xi[0] = 0.0
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def model(self) -> ManifoldModel:
        return self.basis.model

    @property
    def ell(self) -> int:
        return self.basis.ell

    @cached_property
    def coefficients(self) -> np.ndarray:
        c = self.xi * coefficient_scale(self.basis, self.s, self.m, self.grounded)
        c.setflags(write=False)
        return c

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldRealization):
            return NotImplemented
        return (self.basis == other.basis and self.s == other.s and self.m == other.m
                and self.grounded == other.grounded and np.array_equal(self.xi, other.xi)
                and self.seed == other.seed and self.replicate == other.replicate)

    __hash__ = None

    def replace(self, **changes) -> "FieldRealization":
        kw = dict(basis=self.basis, s=self.s, m=self.m, grounded=self.grounded,
                  xi=self.xi, seed=self.seed, replicate=self.replicate)
        kw.update(changes)
        return FieldRealization(**kw)

    # -- serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        return {"model": self.model.name, "s": self.s, "m": self.m, "grounded": self.grounded,
                "ell": self.ell, "seed": self.seed, "replicate": self.replicate,
                "xi": [float(v) for v in self.xi]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "FieldRealization":
        basis = eigen_data(ManifoldModel.from_name(d["model"]), int(d["ell"]))
        return cls(basis, float(d["s"]), float(d["m"]), bool(d["grounded"]),
                   np.asarray(d["xi"], dtype=float), d.get("seed"), d.get("replicate"))

    @classmethod
    def from_json(cls, text: str) -> "FieldRealization":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A test function through its coefficients ``<phi_j, f>``."""

    __test__ = False  # not a pytest class

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be a finite vector")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def eigenfunction(cls, basis: SpectralBasis, j: int) -> "TestFunction":
        c = np.zeros(basis.ell)
        c[j] = 1.0
        return cls(c)

    @classmethod
    def from_values(cls, basis: SpectralBasis, quad: QuadratureRule, values) -> "TestFunction":
        """Project nodal values onto the basis with the quadrature rule."""
        phi = basis.functions(quad.nodes)
        return cls(phi.T @ (quad.weights * np.asarray(values, dtype=float)))

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(self.coeffs + other.coeffs)

    def __mul__(self, a: float) -> "TestFunction":
        return TestFunction(a * self.coeffs)

    __rmul__ = __mul__

    def sobolev_norm2(self, basis: SpectralBasis, s: float, m: float, grounded: bool) -> float:
        """``sum_j <phi_j, f>^2 (m^2 + lambda_j/2)^{-s}``: the pairing variance."""
        return float(np.sum((self.coeffs * coefficient_scale(basis, s, m, grounded)) ** 2))


# ---------------------------------------------------------------------------
# sampling

def sample_field(basis: SpectralBasis, s: float, m: float, grounded: bool = False,
                 rng: np.random.Generator | None = None, *, seed: int | None = None,
                 replicate: int = 0, ell: int | None = None) -> FieldRealization:
    """Draw one truncated field.

    Either pass a generator ``rng`` or a master ``seed``; with a seed the
    normals come from the stream of ``(seed, replicate)``.  Draws are
    sequential, so a longer truncation with the same stream extends a
    shorter one.
    """
    if ell is not None:
        basis = eigen_data(basis.model, ell)
    if m == 0 and not grounded:
        raise ValueError("massless fields must be grounded")
    if rng is None:
        if seed is None:
            raise ValueError("pass rng or seed")
        rng = replicate_rng(seed, replicate, STREAM_FIELD)
        prov = (seed, replicate)
    else:
        prov = (seed, None)
    xi = rng.standard_normal(basis.ell)
    return FieldRealization(basis, float(s), float(m), bool(grounded), xi, prov[0], prov[1])


def noise_block(ell: int, seed: int, start: int, count: int, stream: int = STREAM_FIELD) -> np.ndarray:
    """Raw normals of replicates ``start .. start+count-1`` as rows."""
    out = np.empty((count, ell))
    for i in range(count):
        replicate_rng(seed, start + i, stream).standard_normal(out=out[i])
    return out


def _require_pointwise(field: FieldRealization) -> None:
    if field.s <= field.model.dim / 2.0:
        raise ValueError("pointwise evaluation needs s > n/2")


def eval_field(field: FieldRealization, x) -> float | np.ndarray:
    """Partial sum ``sum_j c_j phi_j(x)``: a float for one point, else an array."""
    _require_pointwise(field)
    vals = field.basis.functions(x) @ field.coefficients
    single = np.ndim(x) == (0 if field.model.kind == CIRCLE else 1)
    return float(vals[0]) if single else vals


def pair(field: FieldRealization, f: TestFunction) -> float:
    """Pairing ``<h, f> = sum_j <phi_j, f> c_j``."""
    if f.coeffs.shape != field.coefficients.shape:
        raise ValueError("test function and field have different truncations")
    return float(np.dot(f.coeffs, field.coefficients))


def ground(field: FieldRealization) -> FieldRealization:
    """Remove the spatial mean (no-op on a grounded field)."""
    if field.grounded:
        return field
    return field.replace(grounded=True)


def lift(field: FieldRealization, xi0: float, m: float | None = None) -> FieldRealization:
    """Add the constant mode ``c_0 = xi0 m^{-s}`` to a grounded field."""
    m = field.m if m is None else float(m)
    if not m > 0:
        raise ValueError("lifting needs m > 0")
    if m != field.m:
        raise ValueError("lift keeps the field's mass; sample with the target m")
    if not field.grounded:
        raise ValueError("lift expects a grounded field")
    xi = field.xi.copy()
    xi[0] = float(xi0)
    return field.replace(grounded=False, xi=xi)


def rescale(field: FieldRealization, r: float) -> FieldRealization:
    """Same noise, regularity ``r``: multiplies ``c_j`` by ``(m^2 + lambda_j/2)^{-(r-s)/2}``."""
    field.model.require_closed()
    return field.replace(s=float(r))


def sup_on_grid(field: FieldRealization, grid) -> float:
    values = np.atleast_1d(eval_field(field, grid))
    if values.size == 0:
        raise ValueError("empty grid")
    return float(values.max())


# ---------------------------------------------------------------------------
# circle fast paths

def circle_fourier(coeffs: np.ndarray) -> np.ndarray:
    """Complex amplitudes ``z_k`` with ``h(x) = Re sum_k z_k e^{2 pi i k x}``.

    Accepts a coefficient vector or a matrix with one field per row.
    """
    c = np.atleast_2d(coeffs)
    ell = c.shape[1]
    K = ell // 2
    z = np.zeros((c.shape[0], K + 1), dtype=complex)
    zr = z.real
    zi = z.imag
    zr[:, 0] = c[:, 0]
    sin_c = c[:, 1::2]
    cos_c = c[:, 2::2]
    np.multiply(cos_c, np.sqrt(2.0), out=zr[:, 1:1 + cos_c.shape[1]])
    np.multiply(sin_c, -np.sqrt(2.0), out=zi[:, 1:1 + sin_c.shape[1]])
    return z


def circle_grid_values(coeffs: np.ndarray, M: int, offset: float = 0.0) -> np.ndarray:
    """Field values at ``(j + offset)/M``, ``j = 0..M-1``, exactly, by folded FFT.

    Frequencies are folded modulo ``M`` (exact on the grid), so the cost is
    ``O(ell + M log M)`` per field.
    """
    vals = fold_to_grid(circle_fourier(coeffs), M, offset)
    return vals if np.ndim(coeffs) == 2 else vals[0]


def fold_to_grid(z: np.ndarray, M: int, offset: float = 0.0) -> np.ndarray:
    """Grid values at ``(j + offset)/M`` from the amplitudes of :func:`circle_fourier`."""
    folded = np.zeros((z.shape[0], M), dtype=complex)
    for lo in range(0, z.shape[1], M):
        chunk = z[:, lo:lo + M]
        if offset:
            chunk = chunk * np.exp(2j * np.pi * np.arange(lo, lo + chunk.shape[1]) * offset / M)
        folded[:, :chunk.shape[1]] += chunk
    return np.fft.ifft(folded, axis=1).real * M


def circle_trig_series(field: FieldRealization):
    """``(k, a_k, b_k)`` with ``h(x) = sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x)``."""
    if field.model.kind != CIRCLE:
        raise ValueError("circle only")
    z = circle_fourier(field.coefficients)[0]
    k = np.arange(z.size, dtype=float)
    return k, z.real.copy(), -z.imag.copy()
