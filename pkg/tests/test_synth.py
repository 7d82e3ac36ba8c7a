import math

import numpy as np
import pytest

from askel.synth import generate_star, sample_cloud, star_distances


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_star_shape_and_cloud(n):
    star, spec = generate_star(n, 100 + n)
    assert star.n_vertices == n + 1 and star.n_edges == n
    assert np.allclose(star.lengths, 100.0)
    d = spec.directions
    cos = d @ d.T
    iu = np.triu_indices(n, k=1)
    assert np.all(np.arccos(np.clip(cos[iu], -1, 1)) >= math.pi / 4 - 1e-9)
    cloud = sample_cloud(star, spec)
    assert len(cloud) == 500 * n
    assert star_distances(cloud.points, star).max() <= 10.0
    lo = star.vertices.min(axis=0) - 10
    hi = star.vertices.max(axis=0) + 10
    assert np.all(cloud.points >= lo) and np.all(cloud.points <= hi)


def test_cloud_fills_the_tube():
    star, spec = generate_star(3, 9)
    pts = sample_cloud(star, spec).points
    d = star_distances(pts, star)
    # uniform in the tube: a solid share of points sits in the outer half
    assert np.mean(d > 5.0) > 0.5


def test_deterministic_and_seed_sensitive():
    a = sample_cloud(*generate_star(4, 77)).points
    b = sample_cloud(*generate_star(4, 77)).points
    c = sample_cloud(*generate_star(4, 78)).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rejects_too_few_arms():
    with pytest.raises(ValueError):
        generate_star(1, 0)


def test_twelve_arms():
    star, spec = generate_star(12, 5)
    cos = spec.directions @ spec.directions.T
    assert cos[np.triu_indices(12, k=1)].max() <= math.cos(math.pi / 4) + 1e-9
    assert spec.metadata()["N"] == 12
