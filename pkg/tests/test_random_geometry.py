import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgflab.fgf import FieldRealization, sample_field
from fgflab.green_kernels import KernelQuery, theta
from fgflab.random_geometry import (
    CircleGeometryConfig, ConformalScene, Curve, circle_geometry_block, circle_geometry_mc,
    conformal_distance, conformal_length, conformal_length_error, conformal_volume, icosphere,
    reference_metrics,
)
from fgflab.spectral_basis import ManifoldModel, eigen_data, geodesic_distance

C = ManifoldModel.circle()
S2 = ManifoldModel.sphere2()


def constant_field(model, ell, value, s=1.5, m=1.0):
    # only the constant mode is excited: h == value everywhere
    basis = eigen_data(model, ell)
    xi = np.zeros(ell)
    xi[0] = value * m ** s * math.sqrt(model.volume)
    return FieldRealization(basis, s, m, False, xi)


@pytest.mark.parametrize("a", [-0.7, 0.0, 0.4])
def test_constant_field_circle_scaling(a):
    scene = ConformalScene(constant_field(C, 33, a), resolution=256)
    assert np.allclose(scene.node_values, a)
    assert conformal_volume(scene) == pytest.approx(math.exp(a), rel=1e-12)
    loop = Curve.circle_loop(C, 64)
    assert conformal_length(scene, loop) == pytest.approx(math.exp(a), rel=1e-12)
    d = conformal_distance(scene, 0.1, 0.35)
    assert d.value == pytest.approx(math.exp(a) * 0.25, rel=1e-12)
    assert d.base == pytest.approx(0.25)


@pytest.mark.parametrize("a", [-0.3, 0.5])
def test_constant_field_sphere_scaling(a):
    scene = ConformalScene(constant_field(S2, 16, a), resolution=24, mesh_level=2)
    assert conformal_volume(scene) == pytest.approx(math.exp(2 * a) * 4 * math.pi, rel=1e-10)
    x, y = np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])
    for rule in ("arc", "endpoints"):
        d = conformal_distance(scene, x, y, edge_rule=rule)
        assert d.value == pytest.approx(math.exp(a) * d.base, rel=1e-10)


def test_region_volume_and_validation():
    scene = ConformalScene(constant_field(C, 9, 0.2), resolution=128)
    half = conformal_volume(scene, lambda x: x < 0.5)
    assert half == pytest.approx(0.5 * math.exp(0.2), rel=1e-12)
    with pytest.raises(ValueError):
        conformal_volume(scene, lambda x: x > 2)
    with pytest.raises(ValueError):
        conformal_volume(scene, np.ones(3, dtype=bool))


def test_scene_rejects_rough_fields_and_other_models():
    basis = eigen_data(C, 17)
    with pytest.raises(ValueError):
        ConformalScene(sample_field(basis, 0.5, 1.0, seed=0))
    b3 = eigen_data(ManifoldModel.sphere3(), 14)
    with pytest.raises(ValueError):
        ConformalScene(sample_field(b3, 2.0, 1.0, seed=0))


def test_curve_validation():
    with pytest.raises(ValueError):
        Curve(C, [0.1])
    with pytest.raises(ValueError):
        Curve(C, [0.0, 0.5])
    assert Curve.circle_loop(C, 10).base_length == pytest.approx(1.0)


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.floats(0, 1), st.floats(0, 1))
def test_circle_distance_sandwich(seed, x, y):
    f = sample_field(eigen_data(C, 257), 1.0, 1.0, seed=seed)
    d = conformal_distance(ConformalScene(f, resolution=512), x, y)
    assert d.sandwich
    # the conformally shorter arc need not be the shorter base arc
    g = geodesic_distance(C, round(x * 512) / 512, round(y * 512) / 512)
    assert d.base == pytest.approx(g) or d.base == pytest.approx(1 - g)
    assert d.snap <= 0.5 / 512 + 1e-12


@settings(max_examples=5)
@given(st.integers(0, 10**6))
def test_sphere_distance_sandwich(seed):
    f = sample_field(eigen_data(S2, 49), 1.5, 1.0, seed=seed)
    scene = ConformalScene(f, resolution=16, mesh_level=2)
    x, y = np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])
    d = conformal_distance(scene, x, y)
    assert d.sandwich
    assert d.path[0] != d.path[-1]


def test_sphere_distance_decreases_under_refinement():
    # each refined graph contains the coarser arcs as paths, and the arc rule
    # weights a path by the exact line integral up to quadrature error
    # (about 1e-8 relative on the 1.1 rad arcs of level 0)
    f = sample_field(eigen_data(S2, 64), 2.0, 1.0, seed=11)
    x, y = icosphere(0).vertices[0], icosphere(0).vertices[3]
    vals = [conformal_distance(ConformalScene(f, resolution=16, mesh_level=k), x, y).value
            for k in range(5)]
    assert all(b <= a * (1 + 1e-7) for a, b in zip(vals, vals[1:]))


def test_icosphere_counts():
    for k in range(4):
        mesh = icosphere(k)
        assert mesh.vertices.shape[0] == 10 * 4 ** k + 2
        assert mesh.edges.shape[0] == 30 * 4 ** k
        assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0)
    with pytest.raises(ValueError):
        icosphere(-1)


def test_length_error_estimate_shrinks():
    f = sample_field(eigen_data(C, 129), 2.0, 1.0, seed=4)
    scene = ConformalScene(f, resolution=256)
    coarse = conformal_length_error(scene, Curve.circle_loop(C, 16))
    fine = conformal_length_error(scene, Curve.circle_loop(C, 128))
    assert fine < coarse


def test_loop_length_matches_grid_volume_in_one_dimension():
    f = sample_field(eigen_data(C, 65), 1.5, 1.0, seed=9)
    scene = ConformalScene(f, resolution=512)
    loop = Curve(C, (np.arange(513) - 0.5) / 512)
    assert conformal_length(scene, loop) == pytest.approx(conformal_volume(scene), rel=1e-10)


def test_reference_metrics_factors():
    q = KernelQuery(S2, 2.0, 1.0)
    ref = reference_metrics(None, q)
    th = theta(None, q)
    assert ref.volume_factor == pytest.approx(math.exp(2 * th))
    assert ref.length_factor == pytest.approx(math.exp(th / 2))
    assert ref.distance(2.0) == pytest.approx(2 * ref.length_factor)
    truncated = reference_metrics(eigen_data(S2, 16), q)
    assert truncated.theta < th


def test_geometry_block_matches_scene():
    cfg = CircleGeometryConfig(s=1.0, m=1.0, ell=129, grid=256).resolved()
    rows = circle_geometry_block(cfg, seed=5, start=3, count=2)
    f = sample_field(eigen_data(C, 129), 1.0, 1.0, seed=5, replicate=4)
    scene = ConformalScene(f, resolution=256)
    assert rows[1, 0] == pytest.approx(conformal_volume(scene), rel=1e-12)
    d = conformal_distance(scene, 0.0, 0.25)
    assert rows[1, 2] == pytest.approx(d.value, rel=1e-12)
    assert rows[1, 3] == pytest.approx(scene.node_values.max(), rel=1e-12)
    assert rows[1, 5] == 1.0


def test_geometry_mc_checks_and_threads():
    cfg = CircleGeometryConfig(s=1.0, m=1.0, ell=257, grid=256)
    one = circle_geometry_mc(cfg, 2000, seed=1, threads=1)
    two = circle_geometry_mc(cfg, 2000, seed=1, threads=2, block=100)
    assert one.volume.estimate == two.volume.estimate
    assert one.distance.se == two.distance.se
    checks = one.checks
    for k in ("volume_identity", "length_identity", "volume_jensen", "length_jensen",
              "distance_upper", "distance_lower", "sandwich_all"):
        assert checks[k], k
    assert one.base_distance == 0.25
    assert one.to_dict()["ell"] == 257
