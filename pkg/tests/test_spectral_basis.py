import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgflab.spectral_basis import (
    ManifoldModel, addition_kernel, as_points, degree_count, degree_multiplicity,
    eigen_data, eigen_data_degree, geodesic_distance, index_degree, point_at_distance, quadrature,
    random_points, zonal_sum,
)

CLOSED = [ManifoldModel.circle(), ManifoldModel.sphere2(), ManifoldModel.sphere3()]
IDS = [m.name for m in CLOSED]


@pytest.mark.parametrize("name", ["circle", "sphere2", "sphere3", "hyperbolic3", "euclidean4"])
def test_model_names_round_trip(name):
    assert ManifoldModel.from_name(name).name == name


def test_invalid_models():
    with pytest.raises(ValueError):
        ManifoldModel("circle", 2)
    with pytest.raises(ValueError):
        ManifoldModel("torus", 2)
    with pytest.raises(ValueError):
        ManifoldModel.hyperbolic3().volume
    with pytest.raises(ValueError):
        eigen_data(ManifoldModel.euclidean(3), 4)
    with pytest.raises(ValueError):
        eigen_data(ManifoldModel.circle(), 0)


def test_known_spectra():
    c = eigen_data(ManifoldModel.circle(), 5)
    assert np.allclose(c.eigenvalues, [0, 4 * np.pi**2, 4 * np.pi**2, 16 * np.pi**2, 16 * np.pi**2])
    s2 = eigen_data_degree(ManifoldModel.sphere2(), 2)
    assert s2.ell == 9
    assert list(s2.eigenvalues) == [0, 2, 2, 2, 6, 6, 6, 6, 6]
    s3 = eigen_data_degree(ManifoldModel.sphere3(), 2)
    assert s3.ell == 1 + 4 + 9
    assert list(s3.eigenvalues[:5]) == [0, 3, 3, 3, 3]


@pytest.mark.parametrize("model", CLOSED, ids=IDS)
def test_degree_bookkeeping(model):
    for L in range(0, 12):
        assert degree_count(model, L) == sum(int(degree_multiplicity(model, k)) for k in range(L + 1))
    j = np.arange(degree_count(model, 11))
    L = index_degree(model, j)
    assert np.all(np.diff(L) >= 0)
    for k in range(12):
        assert np.sum(L == k) == degree_multiplicity(model, k)


@pytest.mark.parametrize("model", CLOSED, ids=IDS)
def test_weyl_lower_bound(model):
    basis = eigen_data(model, 2000 if model.dim > 1 else 5000)
    j = np.arange(1, basis.ell)
    assert np.all(basis.eigenvalues[1:] >= model.weyl_constant * j ** (2.0 / model.dim) * (1 - 1e-12))


@pytest.mark.parametrize("model,L", [(ManifoldModel.circle(), 6), (ManifoldModel.sphere2(), 6),
                                     (ManifoldModel.sphere3(), 4)], ids=IDS)
def test_orthonormal_under_quadrature(model, L):
    basis = eigen_data_degree(model, L)
    q = quadrature(model, 32)
    Phi = basis.functions(q.nodes)
    gram = (Phi * q.weights[:, None]).T @ Phi
    assert np.allclose(gram, np.eye(basis.ell), atol=1e-12)


@pytest.mark.parametrize("model", CLOSED, ids=IDS)
def test_quadrature_weights_sum_to_volume(model):
    assert quadrature(model, 16).weights.sum() == pytest.approx(model.volume, rel=1e-13)


@pytest.mark.parametrize("model,L", [(ManifoldModel.sphere2(), 7), (ManifoldModel.sphere3(), 5)], ids=IDS[1:])
def test_addition_theorem(model, L):
    # sum over one degree of phi_j(x) phi_j(y) depends only on the distance
    basis = eigen_data_degree(model, L)
    lo = degree_count(model, L - 1)
    rng = np.random.default_rng(3)
    x, y = random_points(model, 5, rng), random_points(model, 5, rng)
    lhs = np.sum(basis.functions(x)[:, lo:] * basis.functions(y)[:, lo:], axis=1)
    rhs = addition_kernel(model, L, geodesic_distance(model, x, y))
    assert np.allclose(lhs, rhs, atol=1e-11)


@pytest.mark.parametrize("model", CLOSED, ids=IDS)
def test_zonal_reproducing_property(model):
    # int K_L(x0, z) K_L(z, x0) dz = K_L(0): the degree-L projector is idempotent
    L = 3
    q = quadrature(model, 24)
    x0 = point_at_distance(model, 0.4)
    r = geodesic_distance(model, x0, q.nodes) if model.dim > 1 else geodesic_distance(model, float(x0[0]), q.nodes)
    K = addition_kernel(model, L, r)
    assert q.integrate(K * K) == pytest.approx(addition_kernel(model, L, 0.0), rel=1e-11)


@pytest.mark.parametrize("model", CLOSED, ids=IDS)
def test_zonal_sum_matches_addition_kernel(model):
    r = np.array([0.0, 0.1, 0.37, model.diameter])
    w = np.array([0.5, -1.0, 0.25, 2.0, 0.125])
    direct = sum(wi * addition_kernel(model, L, r) for L, wi in enumerate(w))
    assert np.allclose(zonal_sum(model, r, w), direct, atol=1e-12)
    assert np.allclose(zonal_sum(model, r, w[2:], L_start=2),
                       sum(wi * addition_kernel(model, L + 2, r) for L, wi in enumerate(w[2:])), atol=1e-12)


def test_as_points_validation():
    with pytest.raises(ValueError):
        as_points(ManifoldModel.sphere2(), [1.0, 0.0])
    with pytest.raises(ValueError):
        as_points(ManifoldModel.sphere2(), [2.0, 0.0, 0.0])
    assert as_points(ManifoldModel.circle(), 1.25)[0] == 0.25


unit = st.floats(-5, 5, allow_nan=False)


@given(st.lists(unit, min_size=3, max_size=3))
def test_circle_distance_metric(p):
    C = ManifoldModel.circle()
    x, y, z = p
    dxy, dyz, dxz = geodesic_distance(C, x, y), geodesic_distance(C, y, z), geodesic_distance(C, x, z)
    assert 0 <= dxy <= 0.5
    assert dxy == geodesic_distance(C, y, x)
    assert dxz <= dxy + dyz + 1e-12


@given(st.integers(0, 2**31), st.sampled_from(CLOSED[1:]))
def test_sphere_distance_metric(seed, model):
    rng = np.random.default_rng(seed)
    x, y, z = random_points(model, 3, rng)
    dxy, dyz, dxz = (geodesic_distance(model, a, b) for a, b in ((x, y), (y, z), (x, z)))
    assert 0 <= dxy <= np.pi + 1e-12
    assert geodesic_distance(model, x, x) == pytest.approx(0.0, abs=1e-7)
    assert dxz <= dxy + dyz + 1e-12


@given(st.floats(0, np.pi), st.sampled_from(CLOSED[1:]))
def test_point_at_distance(r, model):
    p = point_at_distance(model, r)
    assert geodesic_distance(model, point_at_distance(model, 0.0)[0], p[0]) == pytest.approx(r, abs=1e-7)


def test_random_points_uniform_mean():
    rng = np.random.default_rng(0)
    x = random_points(ManifoldModel.sphere2(), 20000, rng)
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0)
    assert np.all(np.abs(x.mean(axis=0)) < 0.03)


@given(st.integers(1, 4000))
def test_circle_functions_closed_form(j):
    b = eigen_data(ManifoldModel.circle(), j + 1)
    x = np.array([0.1, 0.7])
    k = (j + 1) // 2
    expected = 1.0 if j == 0 else np.sqrt(2) * (np.sin if j % 2 else np.cos)(2 * np.pi * k * x)
    assert np.allclose(b.phi(j, x), expected, atol=1e-9)
