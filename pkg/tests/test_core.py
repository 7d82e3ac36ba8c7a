import numpy as np
import pytest

from askel.core import deep_components, extract_core, initial_error
from askel.depth import compute_depths, deep_vertices
from askel.geometry import PointCloud
from askel.metrics import homeo_signature, star_signature
from askel.monotone import make_run
from askel.mst import EmbeddedGraph, MstResult, build_mst
from askel.synth import generate_star, sample_cloud


def mst_of_tree(verts, edges):
    cloud = PointCloud.from_points(verts)
    tree = EmbeddedGraph(cloud.points, np.asarray(edges))
    return MstResult(cloud=cloud, tree=tree, avg_edge_length=tree.total_length() / tree.n_edges)


def spider(lengths):
    """Unit-step arms from the origin along distinct directions."""
    dirs = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -1, 0), (0, 0, -1)]
    verts, edges = [(0.0, 0.0, 0.0)], []
    for k, length in enumerate(lengths):
        prev = 0
        for s in range(1, length + 1):
            verts.append(tuple(s * np.array(dirs[k], float)))
            edges.append((prev, len(verts) - 1))
            prev = len(verts) - 1
    return mst_of_tree(np.array(verts), edges)


def core_invariants(mst, core, deep, beta):
    mst_edges = {tuple(e) for e in mst.tree.edges.tolist()}
    assert {tuple(e) for e in core.tree.edges.tolist()} <= mst_edges
    assert core.tree.is_forest()
    deg = core.tree.degrees()
    fixed = set(core.fixed_vertices.tolist())
    for path in core.paths:
        assert path[0] in fixed or deg[path[0]] != 2
        assert all(deg[v] == 2 for v in path[1:-1])
    for v in np.flatnonzero(deg == 1):
        assert v in fixed
    for _, attach in deep_components(mst.tree, deep):
        assert len({d for d, _ in attach}) <= 2
    # dangling pieces that end in a leaf beyond a deep vertex are long
    thr = beta * mst.avg_edge_length
    adj = core.tree.adjacency()
    for leaf in np.flatnonzero(deg == 1):
        if leaf in set(np.asarray(deep).tolist()):
            continue
        length, prev, cur = 0.0, -1, int(leaf)
        while deg[cur] <= 2 and cur not in set(np.asarray(deep).tolist()):
            nxt = [(y, w) for y, w in adj[cur] if y != prev]
            if not nxt:
                break
            prev, (cur, w) = cur, nxt[0]
            length += w
        if deep.size:
            assert length > thr


def test_segment_cloud_gives_diameter_path():
    rng = np.random.default_rng(1)
    x = np.linspace(0, 100, 300)
    pts = np.column_stack([x, rng.normal(0, 0.5, 300), rng.normal(0, 0.5, 300)])
    mst = build_mst(PointCloud.from_points(pts))
    deep = deep_vertices(compute_depths(mst.tree), 30, mst.avg_edge_length)
    assert deep.size == 0
    core = extract_core(mst, deep, 30)
    deg = core.tree.degrees()
    assert np.sum(deg >= 3) == 0 and np.sum(deg == 1) == 2
    ends = core.vertices[deg[core.vertices] == 1]
    assert set(np.argsort(x)[[0, -1]].tolist()) & set(ends.tolist())


def test_short_branches_dropped_at_degree_five_vertex():
    mst = spider([50, 50, 50, 3, 3])
    deep = deep_vertices(compute_depths(mst.tree), 10, mst.avg_edge_length)
    assert deep.tolist() == [0]
    core = extract_core(mst, deep, 10)
    assert core.tree.degrees()[0] == 3
    assert len(core.paths) == 3
    assert sorted(len(p) for p in core.paths) == [51, 51, 51]
    core_invariants(mst, core, deep, 10)


def test_generated_three_star_core_shape():
    star, spec = generate_star(3, 3000)
    cloud = sample_cloud(star, spec)
    mst = build_mst(cloud)
    deep = deep_vertices(compute_depths(mst.tree), 40, mst.avg_edge_length)
    core = extract_core(mst, deep, 40)
    core_invariants(mst, core, deep, 40)
    sub = core.tree
    keep = core.vertices
    index = -np.ones(sub.n_vertices, dtype=np.int64)
    index[keep] = np.arange(len(keep))
    compact = EmbeddedGraph(sub.vertices[keep], index[sub.edges])
    assert homeo_signature(compact) == star_signature(3)


@pytest.mark.parametrize("seed", [5001, 5002, 8003])
def test_invariants_on_generated_stars(seed):
    star, spec = generate_star(seed // 1000, seed)
    cloud = sample_cloud(star, spec)
    mst = build_mst(cloud)
    for beta in (20, 30, 40):
        deep = deep_vertices(compute_depths(mst.tree), beta, mst.avg_edge_length)
        core_invariants(mst, extract_core(mst, deep, beta), deep, beta)


def test_initial_error_examples():
    assert initial_error(None, [make_run([(0, 0), (1, 1), (2, 0)])]) == pytest.approx(1.0)
    assert initial_error(None, [make_run([(0, 0), (1, 0), (2, 0)])]) == 0.0
