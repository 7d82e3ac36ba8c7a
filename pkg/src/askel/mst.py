"""Straight-line graphs and the exact Euclidean minimum spanning tree.

The tree is built by Kruskal on the edges of a Delaunay triangulation, which
contains a Euclidean MST in any dimension.  Small or degenerate inputs (where
qhull refuses to triangulate) go through a dense O(n^2) Prim instead; the
same dense Prim is the reference the tests compare against.

Ties are resolved by the strict total order ``(length, min_id, max_id)`` on
candidate edges, under which the spanning tree is unique, so both routes
return the same edge set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial import Delaunay, QhullError

from .geometry import GeometryError, PointCloud

__all__ = [
    "EmbeddedGraph",
    "GraphError",
    "MstResult",
    "build_mst",
    "prim_mst_dense",
    "split_clusters",
]

# below this many distinct points the dense route is cheaper than qhull
_DENSE_CUTOFF = 64


class GraphError(ValueError):
    """A graph violates a structural precondition (cycle, disconnected, ...)."""


def _pair_lengths(points: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    # one formula for every length so that exact ties compare equal everywhere
    diff = points[i] - points[j]
    return np.sqrt((diff * diff).sum(axis=1))


@dataclass(frozen=True)
class EmbeddedGraph:
    """Vertices in R^m plus an undirected edge list with cached lengths."""

    vertices: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray = field(default=None)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2:
            raise GraphError("vertices must be an (k, m) array")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= len(verts):
                raise GraphError("edge index out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise GraphError("self-loop in edge list")
            edges = np.sort(edges, axis=1)
            keys = edges[:, 0] * len(verts) + edges[:, 1]
            if len(np.unique(keys)) != len(edges):
                raise GraphError("duplicate edge in edge list")
        lengths = _pair_lengths(verts, edges[:, 0], edges[:, 1])
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "lengths", lengths)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n_vertices)]
        for (u, v), w in zip(self.edges.tolist(), self.lengths.tolist()):
            adj[u].append((v, w))
            adj[v].append((u, w))
        return adj

    def component_labels(self) -> tuple[int, np.ndarray]:
        k = self.n_vertices
        e = self.edges
        mat = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(k, k))
        return connected_components(mat, directed=False)

    def is_tree(self) -> bool:
        if self.n_vertices == 0:
            return False
        if self.n_edges != self.n_vertices - 1:
            return False
        n_comp, _ = self.component_labels()
        return n_comp == 1

    def is_forest(self) -> bool:
        n_comp, _ = self.component_labels()
        return self.n_edges == self.n_vertices - n_comp

    def total_length(self) -> float:
        return float(self.lengths.sum())


@dataclass(frozen=True)
class MstResult:
    cloud: PointCloud
    tree: EmbeddedGraph
    avg_edge_length: float


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _kruskal(n: int, points: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Kruskal over candidate pairs (rows ``i < j``) under the total order."""
    w = _pair_lengths(points, cand[:, 0], cand[:, 1])
    order = np.lexsort((cand[:, 1], cand[:, 0], w))
    ws = w[order]
    if ws[0] > 0 and np.all(np.diff(ws) > 0):
        # distinct positive weights: the MST is unique, any exact solver agrees
        t = minimum_spanning_tree(coo_matrix((w, (cand[:, 0], cand[:, 1])), shape=(n, n))).tocoo()
        if t.nnz == n - 1:
            e = np.stack([np.minimum(t.row, t.col), np.maximum(t.row, t.col)], axis=1).astype(np.int64)
            return e
    dsu = _DisjointSet(n)
    chosen = []
    for u, v in cand[order].tolist():
        if dsu.union(u, v):
            chosen.append((u, v))
            if len(chosen) == n - 1:
                break
    return np.array(chosen, dtype=np.int64).reshape(-1, 2)


def prim_mst_dense(points: np.ndarray) -> np.ndarray:
    """O(n^2) Prim on the full distance matrix.

    Returns an ``(n-1, 2)`` edge array.  Vertex order doubles as the id order
    for tie-breaking, so the result is the unique MST under
    ``(length, min_index, max_index)``.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n <= 1:
        return np.zeros((0, 2), dtype=np.int64)
    idx = np.arange(n)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best_d = _pair_lengths(points, np.zeros(n, dtype=np.int64), idx)
    best_from = np.zeros(n, dtype=np.int64)
    edges = np.empty((n - 1, 2), dtype=np.int64)
    for step in range(n - 1):
        outside = ~in_tree
        dmin = best_d[outside].min()
        cand = np.flatnonzero(outside & (best_d == dmin))
        lo = np.minimum(cand, best_from[cand])
        hi = np.maximum(cand, best_from[cand])
        pick = np.lexsort((hi, lo))[0]
        v = int(cand[pick])
        edges[step] = (lo[pick], hi[pick])
        in_tree[v] = True

        d_new = _pair_lengths(points, np.full(n, v), idx)
        key_new = np.minimum(idx, v) * n + np.maximum(idx, v)
        key_old = np.minimum(idx, best_from) * n + np.maximum(idx, best_from)
        better = ~in_tree & ((d_new < best_d) | ((d_new == best_d) & (key_new < key_old)))
        best_d = np.where(better, d_new, best_d)
        best_from = np.where(better, v, best_from)
    return edges


def _delaunay_candidates(points: np.ndarray) -> np.ndarray | None:
    try:
        tri = Delaunay(points)
    except (QhullError, ValueError):
        return None
    simp = tri.simplices
    if len(np.unique(simp)) != len(points):
        # qhull dropped near-coincident points; let the dense route handle it
        return None
    pairs = np.concatenate([simp[:, [a, b]] for a, b in combinations(range(simp.shape[1]), 2)])
    n = len(points)
    keys = np.unique(pairs.min(axis=1).astype(np.int64) * n + pairs.max(axis=1))
    return np.stack([keys // n, keys % n], axis=1)


def build_mst(cloud: PointCloud) -> MstResult:
    """Exact Euclidean MST of ``cloud`` with deterministic tie-breaking.

    Vertices of the returned tree are the cloud's points in cloud order.
    Coincident points are attached to the lowest-id copy by zero-length edges.
    """
    n = len(cloud)
    # work in id order so that index comparisons are id comparisons
    perm = np.argsort(cloud.ids, kind="stable")
    pts = cloud.points[perm]

    uniq, first, inverse = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    edges = [np.stack([first[inverse], np.arange(n)], axis=1)[first[inverse] != np.arange(n)]]

    reps = np.sort(first)
    if len(reps) > 1:
        rep_pts = pts[reps]
        cand = None
        if len(reps) > _DENSE_CUTOFF and len(reps) > cloud.dim + 1:
            cand = _delaunay_candidates(rep_pts)
        local = prim_mst_dense(rep_pts) if cand is None else _kruskal(len(reps), rep_pts, cand)
        edges.append(reps[local])

    sorted_edges = np.concatenate(edges).reshape(-1, 2)
    # back to cloud order
    rank_to_row = perm
    tree_edges = rank_to_row[sorted_edges]
    tree = EmbeddedGraph(cloud.points, tree_edges)
    avg = tree.total_length() / (n - 1) if n > 1 else 0.0
    return MstResult(cloud=cloud, tree=tree, avg_edge_length=avg)


def split_clusters(mst: MstResult, kappa: float) -> list[PointCloud]:
    """Single-edge clustering: drop MST edges longer than ``kappa * l(C)``.

    Components are returned ordered by their smallest original id.
    """
    if not kappa > 0:
        raise GeometryError("kappa must be positive")
    cloud = mst.cloud
    if math.isinf(kappa):
        return [cloud]
    keep = mst.tree.lengths <= kappa * mst.avg_edge_length
    sub = EmbeddedGraph(mst.tree.vertices, mst.tree.edges[keep])
    n_comp, labels = sub.component_labels()
    groups = [np.flatnonzero(labels == c) for c in range(n_comp)]
    groups.sort(key=lambda rows: int(cloud.ids[rows].min()))
    return [cloud.subset(rows) for rows in groups]
