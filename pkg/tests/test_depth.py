import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from askel.depth import brute_force_depths, compute_depths, deep_vertices
from askel.mst import EmbeddedGraph, GraphError


def random_tree(rng, n, dim=3):
    pts = rng.normal(scale=10.0, size=(n, dim))
    edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    return EmbeddedGraph(pts, np.array(edges, dtype=np.int64).reshape(-1, 2))


def star_tree(arms):
    """Centre 0 with straight arms along distinct axes of the given lengths."""
    verts = [np.zeros(3)]
    edges = []
    dirs = np.eye(3).tolist() + (-np.eye(3)).tolist()
    for k, length in enumerate(arms):
        prev = 0
        for step in range(1, int(length) + 1):
            verts.append(np.array(dirs[k]) * step)
            edges.append((prev, len(verts) - 1))
            prev = len(verts) - 1
    return EmbeddedGraph(np.array(verts), np.array(edges))


def test_path_has_zero_depth():
    verts = np.column_stack([np.arange(10.0), np.zeros(10)])
    t = EmbeddedGraph(verts, [(i, i + 1) for i in range(9)])
    d = compute_depths(t)
    assert not d.depth.any()


def test_three_star_depth():
    t = star_tree([9, 7, 5])
    d = compute_depths(t)
    assert d.depth[0] == pytest.approx(5.0)
    assert d.branch_lengths[0] == pytest.approx([9.0, 7.0, 5.0])
    assert np.count_nonzero(d.depth) == 1


def test_branch_lengths_one_per_incident_edge(rng):
    t = random_tree(rng, 80)
    d = compute_depths(t)
    deg = t.degrees()
    for v in range(t.n_vertices):
        assert len(d.branch_lengths[v]) == deg[v]
        assert d.branch_lengths[v] == sorted(d.branch_lengths[v], reverse=True)
        if deg[v] <= 2:
            assert d.depth[v] == 0


def test_non_tree_rejected():
    g = EmbeddedGraph(np.eye(3), [(0, 1), (1, 2), (0, 2)])
    with pytest.raises(GraphError):
        compute_depths(g)


@given(st.integers(0, 2**32 - 1), st.integers(1, 200))
def test_matches_brute_force(seed, n):
    t = random_tree(np.random.default_rng(seed), n)
    assert np.allclose(compute_depths(t).depth, brute_force_depths(t), atol=1e-9, rtol=0)


def test_deep_vertices():
    t = star_tree([20, 20, 20])
    d = compute_depths(t)
    assert deep_vertices(d, 1e9, 1.0).size == 0
    assert deep_vertices(d, 2.0, 1.0).tolist() == [0]
    with pytest.raises(ValueError):
        deep_vertices(d, 0.0, 1.0)


@given(st.integers(0, 2**32 - 1))
def test_deep_set_shrinks_with_beta(seed):
    rng = np.random.default_rng(seed)
    t = random_tree(rng, 120)
    d = compute_depths(t)
    l_avg = t.total_length() / (t.n_vertices - 1)
    sets = [set(deep_vertices(d, b, l_avg).tolist()) for b in (0.5, 1, 2, 4, 8)]
    assert all(b <= a for a, b in zip(sets, sets[1:]))
