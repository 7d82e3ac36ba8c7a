"""Evaluation measures: endpoint count, homeomorphism type, cloud distance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import PointCloud
from .mst import EmbeddedGraph, GraphError

__all__ = [
    "HomeoSignature",
    "RunReport",
    "suppress_degree_two",
    "homeo_signature",
    "star_signature",
    "endpoint_count",
    "max_cloud_distance",
    "point_graph_distances",
    "evaluate",
    "make_report",
]

# canonical AHU string of the degree-2-suppressed tree
HomeoSignature = str

_PAIR_BUDGET = 1 << 21


def suppress_degree_two(graph: EmbeddedGraph) -> EmbeddedGraph:
    """Splice out every degree-2 vertex (its two edges become one).

    Coordinates of surviving vertices are kept; edge lengths become chord
    lengths, which is irrelevant for the topology.
    """
    adj = [set() for _ in range(graph.n_vertices)]
    for u, v in graph.edges.tolist():
        adj[u].add(v)
        adj[v].add(u)
    alive = np.ones(graph.n_vertices, dtype=bool)
    for v in range(graph.n_vertices):
        if len(adj[v]) != 2:
            continue
        a, b = adj[v]
        if b in adj[a]:
            raise GraphError("graph has a cycle")
        adj[a].discard(v)
        adj[b].discard(v)
        adj[a].add(b)
        adj[b].add(a)
        adj[v].clear()
        alive[v] = False
    keep = np.flatnonzero(alive)
    new_index = -np.ones(graph.n_vertices, dtype=np.int64)
    new_index[keep] = np.arange(len(keep))
    edges = sorted({(min(u, v), max(u, v)) for u in keep for v in adj[u]})
    edges = np.array([(new_index[u], new_index[v]) for u, v in edges], dtype=np.int64).reshape(-1, 2)
    return EmbeddedGraph(graph.vertices[keep], edges)


def _centres(adj: list[list[int]]) -> list[int]:
    n = len(adj)
    if n <= 2:
        return list(range(n))
    deg = [len(a) for a in adj]
    layer = [v for v in range(n) if deg[v] == 1]
    remaining = n
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for v in layer:
            for u in adj[v]:
                deg[u] -= 1
                if deg[u] == 1:
                    nxt.append(u)
        layer = nxt
    return sorted(layer)


def _rooted_code(adj: list[list[int]], root: int) -> str:
    parent = {root: -1}
    order = [root]
    for v in order:
        for u in adj[v]:
            if u not in parent:
                parent[u] = v
                order.append(u)
    codes: dict[int, list[str]] = {v: [] for v in order}
    result = ""
    for v in reversed(order):
        code = "(" + "".join(sorted(codes[v])) + ")"
        if parent[v] >= 0:
            codes[parent[v]].append(code)
        else:
            result = code
    return result


def homeo_signature(tree: EmbeddedGraph) -> HomeoSignature:
    """Canonical string of the tree's homeomorphism type.

    Degree-2 vertices are suppressed and the remaining tree is encoded
    AHU-style from its centre; with two centres the smaller encoding wins.
    """
    if not tree.is_tree():
        raise GraphError("homeomorphism signatures are defined for trees only")
    t = suppress_degree_two(tree)
    adj: list[list[int]] = [[] for _ in range(t.n_vertices)]
    for u, v in t.edges.tolist():
        adj[u].append(v)
        adj[v].append(u)
    return min(_rooted_code(adj, c) for c in _centres(adj))


def star_signature(n_arms: int) -> HomeoSignature:
    """Signature of a star with ``n_arms`` edges (a single edge for 1 or 2)."""
    if n_arms <= 2:
        return "(())"
    return "(" + "()" * n_arms + ")"


def endpoint_count(graph: EmbeddedGraph) -> int:
    return int(np.sum(graph.degrees() == 1))


def point_graph_distances(points: np.ndarray, graph: EmbeddedGraph) -> np.ndarray:
    """Distance from every point to the nearest edge (or isolated vertex)."""
    points = np.asarray(points, dtype=float)
    deg = graph.degrees()
    isolated = np.flatnonzero(deg == 0)
    A = np.concatenate([graph.vertices[graph.edges[:, 0]], graph.vertices[isolated]])
    B = np.concatenate([graph.vertices[graph.edges[:, 1]], graph.vertices[isolated]])
    if len(A) == 0:
        raise GraphError("graph has no vertices")
    AB = B - A
    denom = (AB * AB).sum(axis=1)
    best = np.full(len(points), np.inf)
    step = max(1, _PAIR_BUDGET // len(points))
    for lo in range(0, len(A), step):
        a, ab, dn = A[lo : lo + step], AB[lo : lo + step], denom[lo : lo + step]
        rel = points[:, None, :] - a[None, :, :]
        t = np.where(dn > 0, (rel * ab).sum(axis=2) / np.where(dn > 0, dn, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        diff = rel - t[:, :, None] * ab[None, :, :]
        best = np.minimum(best, np.sqrt((diff * diff).sum(axis=2)).min(axis=1))
    return best


def max_cloud_distance(cloud: PointCloud, graph: EmbeddedGraph) -> float:
    return float(point_graph_distances(cloud.points, graph).max())


def _forest_signature(graph: EmbeddedGraph) -> HomeoSignature:
    if graph.is_tree():
        return homeo_signature(graph)
    if not graph.is_forest():
        raise GraphError("skeleton has a cycle")
    n_comp, labels = graph.component_labels()
    sigs = []
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        index = -np.ones(graph.n_vertices, dtype=np.int64)
        index[members] = np.arange(len(members))
        mask = labels[graph.edges[:, 0]] == c
        sub = EmbeddedGraph(graph.vertices[members], index[graph.edges[mask]])
        sigs.append(homeo_signature(sub))
    return "+".join(sorted(sigs))


@dataclass
class RunReport:
    n_points: int
    endpoint_count: int
    signature: HomeoSignature
    max_distance: float
    initial_error: float
    epsilon: float
    stage_timings: dict
    params: dict
    n_deep: int = 0
    n_runs: int = 0
    nonmonotone_runs: int = 0
    overhang_points: int = 0
    pre_collapse_vertices: int = 0
    pre_collapse_max_distance: float = 0.0
    pre_collapse_cloud_distance: float = 0.0
    skeleton_vertices: int = 0
    skeleton_edges: int = 0
    collapse_radius: float = 0.0
    search_calls: int = 0
    slab_evals: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> dict:
        row = {k: v for k, v in self.to_dict().items() if k not in ("stage_timings", "params", "extra")}
        for k, v in self.params.items():
            row[k] = v
        for k, v in self.stage_timings.items():
            row[f"ms_{k}"] = v
        row.update(self.extra)
        return row


def make_report(cloud: PointCloud, results: list, params, skeleton=None, extra_ms=None) -> RunReport:
    """Summarise one or more per-cluster pipeline results into a report."""
    if skeleton is None:
        (only,) = results
        skeleton = only.skeleton
    timings: dict = {}
    for res in results:
        for k, v in res.timings.items():
            timings[k] = timings.get(k, 0.0) + v
    if extra_ms:
        for k, v in extra_ms.items():
            timings[k] = v
            timings["total"] = timings.get("total", 0.0) + v
    graph = skeleton.graph
    pre = skeleton.pre_collapse
    tree_pts = np.concatenate([r.cloud.points for r in results]) if results else cloud.points
    pre_dist = 0.0
    if pre.n_vertices:
        from scipy.spatial import cKDTree

        pre_dist = float(cKDTree(tree_pts).query(pre.vertices)[0].max())
    return RunReport(
        n_points=len(cloud),
        endpoint_count=endpoint_count(graph),
        signature=_forest_signature(graph),
        max_distance=max_cloud_distance(cloud, graph),
        initial_error=max((r.initial_error for r in results), default=0.0),
        epsilon=max((r.epsilon for r in results), default=0.0),
        stage_timings=timings,
        params=params.as_dict(),
        n_deep=sum(len(r.deep) for r in results),
        n_runs=sum(len(r.runs) for r in results),
        nonmonotone_runs=sum(not run.vertex_monotone for r in results for run in r.runs),
        overhang_points=sum(run.overhang for r in results for run in r.runs),
        pre_collapse_vertices=pre.n_vertices,
        pre_collapse_max_distance=pre_dist,
        pre_collapse_cloud_distance=max_cloud_distance(cloud, pre) if pre.n_vertices else 0.0,
        skeleton_vertices=graph.n_vertices,
        skeleton_edges=graph.n_edges,
        collapse_radius=skeleton.collapse_radius,
        search_calls=sum(r.stats.calls for r in results),
        slab_evals=sum(r.stats.slab_evals for r in results),
    )


def evaluate(cloud: PointCloud, skeleton_graph: EmbeddedGraph, truth: EmbeddedGraph | None = None) -> dict:
    """Endpoint and homeomorphism success against an optional ground truth."""
    out = {
        "endpoint_count": endpoint_count(skeleton_graph),
        "signature": _forest_signature(skeleton_graph),
        "max_distance": max_cloud_distance(cloud, skeleton_graph),
    }
    if truth is not None:
        out["endpoint_success"] = out["endpoint_count"] == endpoint_count(truth)
        out["homeo_success"] = out["signature"] == homeo_signature(truth)
    return out
