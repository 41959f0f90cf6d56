import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from fgflab.green_kernels import (
    CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL, DivergentKernel, KernelQuery, asymptotic_profile,
    bernoulli_numbers, default_ell, euclidean_green, euclidean_green_bessel, euclidean_green_increment,
    has_closed_form, hyperbolic3_green, kernel_radial, series_degree, series_green, series_green_radial,
    sphere_green_grounded, theta, torus_green, torus_green_grounded, weyl_tail,
)
from fgflab.spectral_basis import ManifoldModel, eigen_data_degree, point_at_distance

C, S2, S3 = ManifoldModel.circle(), ManifoldModel.sphere2(), ManifoldModel.sphere3()


def value(q, r, method):
    return kernel_radial(q, r, method)[0].value


# Oracles: 30-digit mpmath sums / integrals, frozen.
ORACLES = [
    (KernelQuery(C, 1.0, 1.0), 0.3, 0.958381675476270754386),
    (KernelQuery(C, 2.0, 0.7, True), 0.2, 0.00121641561809626547391),
    (KernelQuery(C, 2.0, 0.7), 0.2, 4.16614769425199880608),
    (KernelQuery(C, 1.5, 1.0), 0.0, 1.02572076416525551143),
    (KernelQuery(S2, 2.0, 1.0), 1.0, 0.104313763662359306946),
    (KernelQuery(S3, 2.0, 0.0, True), 0.7, 0.0803351994538481057893),
]


@pytest.mark.parametrize("q,r,expected", ORACLES)
def test_series_matches_oracle(q, r, expected):
    v = kernel_radial(q, r, EIGEN_SERIES)[0]
    assert v.error_estimate <= 1e-8
    assert abs(v.value - expected) <= v.error_estimate + 1e-13


@pytest.mark.parametrize("q,r,expected", ORACLES)
def test_heat_integral_matches_oracle(q, r, expected):
    assert value(q, r, HEAT_INTEGRAL) == pytest.approx(expected, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("q,r,expected", [o for o in ORACLES if has_closed_form(o[0])])
def test_closed_form_matches_oracle(q, r, expected):
    assert value(q, r, CLOSED_FORM) == pytest.approx(expected, rel=1e-12)


def test_torus_exact_constants():
    assert torus_green_grounded(2, 0.5) == pytest.approx(-7 / 1440, rel=1e-14)
    assert torus_green_grounded(3, 0.5) == pytest.approx(-31 / 120960, rel=1e-14)
    assert torus_green_grounded(1, 0.0) == pytest.approx(1 / 6, rel=1e-14)


def test_bernoulli_numbers():
    B = bernoulli_numbers(8)
    assert B[:5] == (Fraction(1), Fraction(-1, 2), Fraction(1, 6), Fraction(0), Fraction(-1, 30))
    assert B[6] == Fraction(1, 42) and B[8] == Fraction(-1, 30)


def test_sphere2_s1_generating_function():
    # sum_{L>=1} (2L+1)/(L(L+1)) P_L(x) = -1 - log((1-x)/2)
    r = np.array([0.3, 1.0, 2.5, np.pi])
    expected = (-1.0 - np.log((1 - np.cos(r)) / 2)) / (2 * np.pi)
    assert np.allclose(sphere_green_grounded(S2, 1, r), expected, rtol=1e-13)


@pytest.mark.parametrize("model,s", [(S2, 1), (S2, 2), (S3, 1), (S3, 2)])
def test_sphere_closed_forms_vs_series(model, s):
    q = KernelQuery(model, s, 0.0, True)
    r = np.array([0.2, 1.1, 2.9])
    cf = np.array([v.value for v in kernel_radial(q, r, CLOSED_FORM)])
    se = np.array([v.value for v in kernel_radial(q, r, EIGEN_SERIES)])
    assert np.allclose(cf, se, atol=1e-7)


@given(st.floats(0.0, 1.0), st.floats(0.05, 5.0))
def test_circle_symmetry_and_grounding(r, m):
    full = KernelQuery(C, 1.0, m)
    gr = KernelQuery(C, 1.0, m, True)
    g = value(full, r, CLOSED_FORM)
    assert g == pytest.approx(value(full, 1.0 - r, CLOSED_FORM), rel=1e-12)
    assert value(gr, r, CLOSED_FORM) == pytest.approx(g - m ** -2, rel=1e-10, abs=1e-12)


@given(st.floats(0.01, 0.5), st.sampled_from([1.0, 2.0, 3.0]))
def test_circle_three_routes(r, s):
    q = KernelQuery(C, s, 0.0, True)
    vals = [value(q, r, meth) for meth in (CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL)]
    assert max(vals) - min(vals) < 1e-7


@given(st.floats(0.05, np.pi), st.sampled_from([S2, S3]), st.sampled_from([1, 2]))
def test_sphere_three_routes(r, model, s):
    q = KernelQuery(model, s, 0.0, True)
    vals = [value(q, r, meth) for meth in (CLOSED_FORM, EIGEN_SERIES, HEAT_INTEGRAL)]
    assert max(vals) - min(vals) < 1e-6 * max(1.0, abs(vals[0]))


@given(st.floats(0.0, 3.0), st.floats(0.1, 3.0), st.sampled_from([S2, S3]))
def test_grounded_shift_sphere(r, m, model):
    q, g = KernelQuery(model, 2.0, m), KernelQuery(model, 2.0, m, True)
    lhs = value(g, r, EIGEN_SERIES)
    assert lhs == pytest.approx(value(q, r, EIGEN_SERIES) - m ** -4 / model.volume, abs=1e-8)


@pytest.mark.parametrize("model,s,m", [(C, 1.0, 0.5), (C, 2.0, 1.0), (S2, 2.0, 1.0), (S3, 2.5, 0.5)])
def test_weyl_tail_bounds_truncation(model, s, m):
    q = KernelQuery(model, s, m)
    L = 8
    ref = series_green_radial(q, [0.0, 0.4], L_max=4096)
    cut = series_green_radial(q, [0.0, 0.4], L_max=L)
    bound = weyl_tail(model, s, m, L)
    for a, b in zip(ref, cut):
        assert abs(a.value - b.value) <= bound
    # the bound is attained on the diagonal up to the far tail
    assert abs(ref[0].value - cut[0].value) >= 0.5 * (bound - weyl_tail(model, s, m, 4096))


def test_series_degree_meets_tolerance():
    for model, s, m in [(C, 2.0, 1.0), (S2, 2.0, 0.5), (S3, 2.0, 1.0)]:
        L = series_degree(model, s, m, 1e-8)
        assert weyl_tail(model, s, m, L) < 1e-8 <= weyl_tail(model, s, m, L - 1)


def test_divergent_cases():
    with pytest.raises(DivergentKernel):
        series_green_radial(KernelQuery(S2, 1.0, 1.0), 0.0)
    with pytest.raises(DivergentKernel):
        sphere_green_grounded(S2, 1, 0.0)
    with pytest.raises(DivergentKernel):
        euclidean_green(3, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        KernelQuery(C, 1.0, 0.0)
    with pytest.raises(ValueError):
        KernelQuery(C, -1.0, 1.0)
    with pytest.raises(ValueError):
        series_degree(S2, 1.0, 1.0)


def test_series_green_at_points():
    q = KernelQuery(S2, 2.0, 1.0)
    basis = eigen_data_degree(S2, 40)
    x, y = point_at_distance(S2, [0.0, 1.0])
    assert series_green(basis, q, x, y).value == pytest.approx(0.104313763662359, abs=1e-6)


@given(st.integers(1, 3), st.floats(0.3, 4.0), st.floats(0.2, 3.0), st.floats(0.05, 4.0))
def test_euclidean_bessel_and_quadrature_agree(n, s, m, r):
    assert euclidean_green(n, s, m, r) == pytest.approx(euclidean_green_bessel(n, s, m, r), rel=1e-9)


def test_euclidean_oracles():
    assert euclidean_green(1, 1.0, 2.0, 0.4) == pytest.approx(math.exp(-2 * math.sqrt(2) * 0.4) / (2 * math.sqrt(2)),
                                                              rel=1e-12)
    assert euclidean_green(3, 1.5, 1.0, 1.0) == pytest.approx(0.0342666376483519395, rel=1e-11)
    assert euclidean_green(2, 2.0, 0.5, 0.3) == pytest.approx(0.605351771127459038, rel=1e-11)


@given(st.integers(1, 4), st.floats(0.3, 4.0), st.floats(0.2, 3.0), st.floats(0.05, 3.0), st.floats(0.3, 3.0))
def test_euclidean_scaling(n, s, m, r, a):
    lhs = euclidean_green(n, s, a * m, r)
    assert lhs == pytest.approx(a ** (n - 2 * s) * euclidean_green(n, s, m, a * r), rel=1e-9)


@given(st.integers(1, 4), st.floats(1.2, 4.0), st.floats(0.2, 3.0), st.floats(0.05, 3.0))
def test_euclidean_recursion(n, s, m, r):
    lhs = s * m * m * euclidean_green(n, s + 1, m, r)
    rhs = (s - n / 2) * euclidean_green(n, s, m, r) + r * r / (2 * (s - 1)) * euclidean_green(n, s - 1, m, r)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-14)


@given(st.integers(2, 4), st.floats(0.5, 3.0), st.floats(0.2, 2.0), st.floats(0.1, 3.0), st.floats(0.0, 1.0))
def test_euclidean_dimension_shift(n, s, m, r, frac):
    a = -0.9 * s + frac * (0.9 * s + 0.9 * n / 2)
    lhs = euclidean_green(n, s + a, m, r)
    rhs = (2 * math.pi) ** (-a) * math.exp(math.lgamma(s) - math.lgamma(s + a)) * euclidean_green(n - 2 * a, s, m, r)
    assert lhs == pytest.approx(rhs, rel=1e-8)


@pytest.mark.parametrize("n,s", [(1, 2.0), (3, 2.0), (3, 1.6), (1, 0.8)])
def test_asymptotic_profiles(n, s):
    e, c, log_flag = asymptotic_profile(n, s, 1.0)
    assert not log_flag
    r = 1e-4
    assert euclidean_green_increment(n, s, 1.0, r) / (c * r**e) == pytest.approx(1.0, abs=0.01)


def test_log_case_next_order_term():
    # n = 2, s = 2, m = 1: G(0) - G(r) = (r^2 / 2pi) (log(1/r) + log(sqrt 2) - gamma + 1/2) + o(r^2)
    e, c, log_flag = asymptotic_profile(2, 2.0, 1.0)
    assert log_flag and e == 2.0 and c == pytest.approx(1 / (2 * math.pi))
    k = math.log(math.sqrt(2)) - np.euler_gamma + 0.5
    for r in (1e-3, 1e-5, 1e-7):
        ratio = euclidean_green_increment(2, 2.0, 1.0, r) / (c * r * r * math.log(1 / r))
        assert (ratio - 1) * math.log(1 / r) == pytest.approx(k, abs=2e-3)


@given(st.floats(0.05, 6.0), st.floats(0.0, 3.0), st.sampled_from([1.0, 2.0]))
def test_hyperbolic_displays(r, m, s):
    k = math.sqrt(2 * m * m + 1)
    ref = math.exp(-k * r) / (2 * math.pi * math.sinh(r))
    if s == 2.0:
        ref *= r / k
    assert hyperbolic3_green(s, m, r) == pytest.approx(ref, rel=1e-10)


def test_torus_green_closed_form():
    m = 0.8
    k = math.sqrt(2) * m
    assert torus_green(m, 0.25) == pytest.approx(math.cosh(k * 0.25) / (k * math.sinh(k / 2)), rel=1e-14)


def test_theta_and_default_ell():
    q = KernelQuery(C, 1.0, 0.0, True)
    assert theta(None, q) == pytest.approx(1 / 6, abs=1e-7)
    ell = default_ell(q)
    from fgflab.spectral_basis import eigen_data
    assert theta(None, q) - theta(eigen_data(C, ell), q) <= 1e-4 * theta(None, q)


def test_heat_error_estimate_small():
    q = KernelQuery(S2, 2.0, 1.0)
    v = kernel_radial(q, 0.5, HEAT_INTEGRAL)[0]
    assert v.error_estimate < 1e-9
    assert v.method == HEAT_INTEGRAL


def test_legendre_oracle_independent_route():
    # direct Legendre partial sum with scipy's evaluator, far past the tail rule
    L = np.arange(0, 3000)
    w = (2 * L + 1) / (4 * np.pi) * (1 + L * (L + 1) / 2.0) ** -2.0
    direct = float(np.sum(w * special.eval_legendre(L, math.cos(1.0))))
    assert direct == pytest.approx(0.104313763662359306946, abs=1e-10)
