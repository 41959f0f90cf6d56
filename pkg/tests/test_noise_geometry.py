import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgflab.green_kernels import EIGEN_SERIES, HEAT_INTEGRAL, KernelQuery
from fgflab.noise_geometry import (
    NoiseMetric, count_at, covering_numbers, covering_profile, dudley_bound, dudley_mesh_term,
    farthest_point_traversal, grid_mesh, holder_scan, noise_distance,
)
from fgflab.spectral_basis import ManifoldModel, geodesic_distance, quadrature, random_points

C, S2, S3 = ManifoldModel.circle(), ManifoldModel.sphere2(), ManifoldModel.sphere3()
BROWNIAN_BRIDGE = NoiseMetric(KernelQuery(C, 1.0, 0.0, True))


@given(st.floats(0.0, 1.0))
def test_circle_closed_form(r):
    assert BROWNIAN_BRIDGE.radial(r)[0] ** 2 == pytest.approx(2 * min(r, 1 - r) * (1 - min(r, 1 - r)), abs=1e-13)


def test_routes_agree():
    q = KernelQuery(C, 2.0, 0.0, True)
    r = np.array([0.01, 0.2, 0.5])
    # kernel errors of 1e-8 propagate to at most 4e-8 in rho^2
    a = NoiseMetric(q).radial(r) ** 2
    assert np.allclose(a, NoiseMetric(q, EIGEN_SERIES).radial(r) ** 2, rtol=0, atol=4e-8)
    assert np.allclose(a, NoiseMetric(q, HEAT_INTEGRAL).radial(r) ** 2, rtol=0, atol=4e-8)


def test_validation():
    with pytest.raises(ValueError):
        NoiseMetric(KernelQuery(S2, 1.0, 1.0))
    with pytest.raises(ValueError):
        NoiseMetric(KernelQuery(C, 1.0, 1.0), route="bogus")


@given(st.floats(0.0, 0.5), st.floats(0.1, 3.0))
def test_grounding_does_not_change_distance(r, m):
    full = NoiseMetric(KernelQuery(C, 1.0, m)).radial(r)
    grounded = NoiseMetric(KernelQuery(C, 1.0, m, True)).radial(r)
    assert full[0] == pytest.approx(grounded[0], abs=1e-10)


METRICS = [NoiseMetric(KernelQuery(C, 1.5, 1.0)), NoiseMetric(KernelQuery(S2, 2.0, 0.0, True)),
           NoiseMetric(KernelQuery(S3, 2.0, 0.0, True))]


@given(st.integers(0, 10**6), st.sampled_from(range(3)))
def test_metric_axioms(seed, i):
    nm = METRICS[i]
    model = nm.query.model
    rng = np.random.default_rng(seed)
    x, y, z = (random_points(model, 20, rng) for _ in range(3))
    dxy, dyz, dxz = noise_distance(nm, x, y), noise_distance(nm, y, z), noise_distance(nm, x, z)
    assert np.all(dxy >= 0)
    assert np.allclose(dxy, noise_distance(nm, y, x))
    assert np.all(dxz <= dxy + dyz + 1e-12)


@given(st.floats(0.01, np.pi))
def test_dist_monotone_in_s(r):
    # (lambda_1/2)^s rho_{s,0}^2 is nonincreasing in s (S^2: lambda_1/2 = 1)
    vals = [NoiseMetric(KernelQuery(S2, s, 0.0, True)).radial(r)[0] ** 2 for s in (1.5, 2.0, 3.0)]
    assert vals[0] >= vals[1] - 1e-10 and vals[1] >= vals[2] - 1e-10


def test_spline_matches_direct_on_sphere():
    nm = METRICS[1]
    r = np.linspace(0.0, np.pi, 37)
    assert np.allclose(nm.radial_interp(r), nm.radial(r), atol=1e-5)


def test_count_at():
    radii = np.array([0.9, 0.5, 0.5, 0.2, 0.0])
    assert count_at(radii, 1.0) == 1
    assert count_at(radii, 0.5) == 2
    assert count_at(radii, 0.3) == 4
    assert count_at(radii, 0.0) == 5


@pytest.mark.parametrize("nm,grid", [
    (BROWNIAN_BRIDGE, np.arange(64) / 64),
    (BROWNIAN_BRIDGE, np.sort(np.random.default_rng(1).random(50))),
    (METRICS[1], quadrature(S2, 8).nodes),
], ids=["uniform", "irregular", "sphere2"])
def test_greedy_centers_cover(nm, grid):
    model = nm.query.model
    order, radii, diam = farthest_point_traversal(nm, grid)
    pts = np.asarray(grid)
    D = np.array([nm.radial(geodesic_distance(model, p, pts)) for p in pts])
    assert diam == pytest.approx(D.max(), rel=1e-4)
    assert np.all(np.diff(radii) <= 1e-15) and radii[-1] == 0
    for k in (1, 3, 10):
        centers = order[:k]
        assert D[centers].min(axis=0).max() == pytest.approx(radii[k - 1], rel=1e-4, abs=1e-12)
        # packing: centers pairwise at least radii[k-1] apart
        if k > 1:
            sub = D[np.ix_(order[:k + 1], order[:k + 1])] + np.eye(k + 1) * 9
            assert sub.min() >= radii[k - 1] * (1 - 1e-4)


def test_covering_profile_brackets():
    grid = np.arange(1024) / 1024
    prof = covering_profile(BROWNIAN_BRIDGE, grid)
    assert np.all(np.diff(prof.eps) < 0)
    assert np.all(np.diff(prof.counts) >= 0)
    assert np.all(prof.lower <= prof.counts)
    assert prof.diameter == pytest.approx(math.sqrt(0.5))
    rows = prof.to_rows()
    assert rows[0][1] == 1 and rows[0][2] == 0.0
    assert len(prof.centers(prof.eps[5])) == prof.counts[5]


def test_covering_rejects_coarse_grid():
    grid = np.arange(16) / 16
    with pytest.raises(ValueError):
        covering_numbers(BROWNIAN_BRIDGE, grid, [0.1])
    with pytest.raises(ValueError):
        covering_numbers(BROWNIAN_BRIDGE, np.arange(1024) / 1024, [])


def test_grid_mesh_circle_exact():
    assert grid_mesh(BROWNIAN_BRIDGE, np.arange(100) / 100) == pytest.approx(math.sqrt(2 * 0.005 * 0.995))


def test_dudley_exact_integral_vs_fine_riemann_sum():
    prof = covering_profile(BROWNIAN_BRIDGE, np.arange(256) / 256)
    exact = dudley_bound(prof)
    eps = np.linspace(0, prof.radii[0], 200001)[1:]
    counts = np.array([count_at(prof.radii, e) for e in eps[::50]])
    approx = 24 * np.sum(np.sqrt(np.log(counts))) * (eps[50] - eps[0])
    assert approx == pytest.approx(exact, rel=2e-3)
    assert dudley_mesh_term(prof) > 0


def test_dudley_grows_with_grid_resolution():
    a = dudley_bound(covering_profile(BROWNIAN_BRIDGE, np.arange(256) / 256))
    b = dudley_bound(covering_profile(BROWNIAN_BRIDGE, np.arange(1024) / 1024))
    assert b >= a


def test_holder_ratio_closed_form():
    # rho / r^{1/2} = sqrt(2 (1 - r)) peaks at the smallest offset
    M = 256
    assert holder_scan(BROWNIAN_BRIDGE, np.arange(M) / M, 0.5 - 1e-12) == pytest.approx(
        math.sqrt(2 * (1 - 1 / M)) * (1 / M) ** (-1e-12), rel=1e-9)
    with pytest.raises(ValueError):
        holder_scan(BROWNIAN_BRIDGE, np.arange(M) / M, 0.5)


def test_holder_ratio_stable_under_refinement():
    a = holder_scan(BROWNIAN_BRIDGE, np.arange(512) / 512, 0.25)
    b = holder_scan(BROWNIAN_BRIDGE, np.arange(2048) / 2048, 0.25)
    assert a == pytest.approx(b, rel=1e-6)


def test_holder_on_sphere_grid():
    nm = NoiseMetric(KernelQuery(S2, 2.0, 1.0))
    val = holder_scan(nm, quadrature(S2, 8).nodes, 0.9)
    assert 0 < val < 10
