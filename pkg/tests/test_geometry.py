import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from askel.geometry import (
    GeometryError,
    PointCloud,
    Segment,
    euclid_point_segment,
    euclid_points_segment,
    projection_parameter,
    segment_cloud_distance,
    slab_distance,
)
from askel.monotone import make_run

from conftest import random_monotone_run


def seg(a, b):
    return Segment(np.asarray(a, float), np.asarray(b, float))


def test_euclid_examples():
    assert euclid_point_segment(np.array([0.0, 1.0]), seg((-1, 0), (1, 0))) == pytest.approx(1.0)
    assert euclid_point_segment(np.array([2.0, 0.0]), seg((-1, 0), (1, 0))) == pytest.approx(1.0)
    assert euclid_point_segment(np.array([3.0, 4.0]), seg((0, 0), (0, 0))) == pytest.approx(5.0)


def test_euclid_dimension_mismatch():
    with pytest.raises(GeometryError):
        euclid_point_segment(np.array([0.0, 1.0, 2.0]), seg((0, 0), (1, 0)))


def test_projection_parameter_examples():
    axis = seg((0, 0), (2, 0))
    assert projection_parameter(np.array([1.0, 5.0]), axis) == pytest.approx(0.5)
    assert projection_parameter(axis.a, axis) == 0.0
    assert projection_parameter(axis.b, axis) == 1.0
    assert projection_parameter(np.array([-1.0, 0.0]), axis) == pytest.approx(-0.5)
    with pytest.raises(GeometryError):
        projection_parameter(np.array([1.0, 1.0]), seg((1, 1), (1, 1)))


def test_slab_distance_examples():
    p = np.array([1.0, 1.0])
    assert slab_distance(p, seg((0, 0), (2, 0)), seg((0, 0), (2, 0))) == pytest.approx(1.0)
    # hyperplane x = 1 meets [(0,0),(3,3)] at (1,1)
    assert slab_distance(p, seg((0, 0), (3, 3)), seg((0, 0), (3, 0))) == pytest.approx(0.0, abs=1e-12)
    assert slab_distance(np.array([0.5, 0.5]), seg((0, 0), (2, 2)), seg((0, 0), (2, 2))) == pytest.approx(0.0, abs=1e-12)


def test_slab_distance_degenerate_axis_projection_falls_back():
    # chord ends share the axis parameter; the nearer end point is used
    d = slab_distance(np.array([0.0, 2.0]), seg((0, 0), (0, 5)), seg((0, 0), (1, 0)))
    assert d == pytest.approx(2.0)


def test_segment_cloud_distance_examples():
    run = make_run([(0, 0), (1, 1), (2, 0)])
    assert segment_cloud_distance((0, 2), run) == pytest.approx(1.0)
    assert segment_cloud_distance((0, 1), run) == 0.0
    line = make_run([(k, 2 * k) for k in range(5)])
    assert segment_cloud_distance((0, 4), line) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(GeometryError):
        segment_cloud_distance((2, 1), run)
    with pytest.raises(GeometryError):
        segment_cloud_distance((0, 3), run)


@given(st.integers(0, 2**32 - 1))
def test_slab_equals_perpendicular_for_axis_parallel_chord(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=3)
    direction = rng.normal(size=3)
    b = a + direction
    t = rng.uniform(0.05, 0.95)
    off = rng.normal(size=3)
    off -= off @ direction / (direction @ direction) * direction
    p = a + t * direction + off
    s = seg(a, b)
    assert slab_distance(p, s, s) == pytest.approx(euclid_point_segment(p, s), abs=1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(3, 30))
def test_segment_cloud_distance_rigid_motion_invariant(seed, n):
    rng = np.random.default_rng(seed)
    run = random_monotone_run(rng, n)
    R = Rotation.random(random_state=seed).as_matrix()
    shift = rng.normal(scale=50.0, size=3)
    moved = make_run(run.points @ R.T + shift, ids=run.ids)
    for i, j in [(0, n - 1), (0, n // 2), (n // 3, n - 1)]:
        if i < j:
            assert segment_cloud_distance((i, j), moved) == pytest.approx(
                segment_cloud_distance((i, j), run), abs=1e-9
            )


def test_sub_chord_error_at_most_twice_chord():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(3, 13))
        run = random_monotone_run(rng, n, noise=float(rng.uniform(0.1, 5.0)))
        D = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = segment_cloud_distance((i, j), run)
        for i in range(n):
            for j in range(i + 1, n):
                sub = D[i : j + 1, i : j + 1]
                assert sub.max() <= 2 * D[i, j] + 1e-9


def test_vectorised_euclid_matches_scalar(rng):
    pts = rng.normal(size=(40, 4))
    s = seg(rng.normal(size=4), rng.normal(size=4))
    vec = euclid_points_segment(pts, s.a, s.b)
    assert np.allclose(vec, [euclid_point_segment(p, s) for p in pts], atol=1e-12)


def test_point_cloud_validation():
    with pytest.raises(GeometryError):
        PointCloud.from_points(np.zeros((0, 3)))
    with pytest.raises(GeometryError):
        PointCloud.from_points([[1.0], [2.0]])
    with pytest.raises(GeometryError):
        PointCloud.from_points([[np.nan, 0.0]])
    with pytest.raises(GeometryError):
        PointCloud(np.zeros((2, 2)), np.array([0, 0]))
    c = PointCloud.from_points(np.arange(12.0).reshape(4, 3))
    assert c.dim == 3 and len(c) == 4
    sub = c.subset(np.array([3, 1]))
    assert sub.ids.tolist() == [3, 1]
