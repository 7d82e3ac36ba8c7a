"""Greedy run straightening, skeleton assembly and the full pipeline.

Each monotone run is replaced by a polyline through a subset of its points:
from the current index the next one is found by doubling the step until the
chord error exceeds ``epsilon`` and then bisecting the last bracket.  The
emitted indices satisfy

(a) the chord from the previous index to the new one has error <= eps,
(b) the chord one step further has error > eps,

both up to an absolute rounding slack ``SLACK``,

and a run approximated at ``2 * eps`` never uses more vertices than the best
polyline at ``eps`` (see :func:`optimal_run_oracle`).

Assembly joins the run polylines and contracts clusters of short edges.  An
edge counts as short when the MST path between its end points is at most
``beta * l(C)``; ``collapse_metric="euclidean"`` measures the straight edge
instead.
"""

from __future__ import annotations

import gc
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numpy as np

from .core import CoreTree, extract_core, initial_error
from .depth import DepthTable, compute_depths, deep_vertices
from .geometry import TOL, GeometryError, PointCloud
from .monotone import MonotoneRun, edge_clouds, split_monotone
from .mst import EmbeddedGraph, GraphError, MstResult, build_mst, split_clusters

__all__ = [
    "ApproxParams",
    "SearchStats",
    "Skeleton",
    "PipelineResult",
    "approximate_run",
    "prune_leaf_branches",
    "optimal_run_oracle",
    "assemble_skeleton",
    "run_pipeline",
    "build_ask",
    "DEFAULT_BETA",
    "DEFAULT_GAMMA",
    "SLACK",
    "gc_paused",
]

DEFAULT_BETA = 30.0
DEFAULT_GAMMA = 1.3
ORACLE_MAX_POINTS = 500
# absolute slack on "chord error <= eps" so that rounding on collinear points
# does not split a straight run at eps = 0
SLACK = TOL


@dataclass(frozen=True)
class ApproxParams:
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    kappa: float = math.inf
    turn_tolerance: float | None = None
    collapse_metric: str = "tree"
    prune_factor: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 1.0 <= self.gamma <= 10.0:
            raise ValueError("gamma must lie in [1, 10]")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.turn_tolerance is not None and self.turn_tolerance < 0:
            raise ValueError("turn_tolerance must be non-negative")
        if self.collapse_metric not in ("tree", "euclidean"):
            raise ValueError("collapse_metric must be 'tree' or 'euclidean'")
        if not self.prune_factor >= 0:
            raise ValueError("prune_factor must be non-negative")

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "gamma": self.gamma,
            "kappa": None if math.isinf(self.kappa) else self.kappa,
            "turn_tolerance": self.turn_tolerance,
            "collapse_metric": self.collapse_metric,
            "prune_factor": self.prune_factor,
        }


@dataclass
class SearchStats:
    """Work counters for :func:`approximate_run`.

    ``calls`` counts chord-error evaluations d([p_i p_j], run); ``slab_evals``
    counts the point-to-chord distances behind them.
    """

    calls: int = 0
    slab_evals: int = 0


@dataclass(frozen=True)
class Skeleton:
    graph: EmbeddedGraph
    provenance: list
    pre_collapse: EmbeddedGraph
    pre_collapse_rows: np.ndarray
    collapse_radius: float = 0.0
    pruned_branches: int = 0


def _chord_error(run: MonotoneRun, i: int, j: int, stats: SearchStats) -> float:
    stats.calls += 1
    if j - i < 2:
        return 0.0
    stats.slab_evals += j - i - 1
    pts, t = run.points, run.params
    inner = pts[i + 1 : j]
    a, b = pts[i], pts[j]
    dt = t[j] - t[i]
    if abs(dt) < TOL:
        d = np.minimum(np.linalg.norm(inner - a, axis=1), np.linalg.norm(inner - b, axis=1))
    else:
        u = np.clip((t[i + 1 : j] - t[i]) / dt, 0.0, 1.0)
        d = np.linalg.norm(inner - (a + u[:, None] * (b - a)), axis=1)
    return float(d.max())


def approximate_run(run: MonotoneRun, epsilon: float, stats: SearchStats | None = None) -> list[int]:
    """Indices ``0 = ind_1 < ... < ind_m = n-1`` of an ``epsilon`` polyline.

    From each index the next one is found by probing ``cur + 2, cur + 4, ...``
    until a chord fails, then bisecting between the last good and the first
    bad probe.  The bisection keeps ``lo`` feasible and ``hi`` infeasible, so
    every emitted chord has error at most ``epsilon`` and the chord one point
    further has error above it.  Shorter chords in between may still fail
    (the chord error is not monotone in the far index); nothing downstream
    needs them.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    n = len(run.points)
    if n < 2:
        raise GeometryError("a run needs at least two points")
    stats = SearchStats() if stats is None else stats
    last = n - 1
    ind = [0]
    cur = 0
    while cur < last:
        lo, hi = cur + 1, None
        j = 0
        while True:
            probe = min(cur + (2 << j), last)
            if _chord_error(run, cur, probe, stats) > epsilon + SLACK:
                hi = probe
                break
            lo = probe
            if probe == last:
                break
            j += 1
        if hi is None:
            nxt = last
        else:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if _chord_error(run, cur, mid, stats) <= epsilon + SLACK:
                    lo = mid
                else:
                    hi = mid
            nxt = lo
        ind.append(nxt)
        cur = nxt
    return ind


def optimal_run_oracle(run: MonotoneRun, epsilon: float) -> int:
    """Fewest polyline vertices (ends included) with every chord error <= eps.

    Shortest path over the DAG of feasible chords.  Chord errors are
    recomputed here from the run axis rather than taken from the run's cached
    parameters.
    """
    n = len(run.points)
    if n > ORACLE_MAX_POINTS:
        raise ValueError(f"oracle is limited to {ORACLE_MAX_POINTS} points, got {n}")
    pts = run.points
    a, b = np.asarray(run.axis.a), np.asarray(run.axis.b)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= TOL * TOL:
        t = np.zeros(n)
    else:
        t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    t[0], t[-1] = 0.0, 1.0

    feasible = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        feasible[i, i + 1] = True
        if i + 2 >= n:
            continue
        js = np.arange(i + 2, n)
        ss = np.arange(i + 1, n - 1)
        dt = t[js] - t[i]
        flat = np.abs(dt) < TOL
        frac = np.clip((t[ss][:, None] - t[i]) / np.where(flat, 1.0, dt)[None, :], 0.0, 1.0)
        foot = pts[i][None, None, :] + frac[:, :, None] * (pts[js] - pts[i])[None, :, :]
        d = np.linalg.norm(pts[ss][:, None, :] - foot, axis=2)
        if flat.any():
            near = np.minimum(np.linalg.norm(pts[ss] - pts[i], axis=1)[:, None],
                              np.linalg.norm(pts[ss][:, None, :] - pts[js][None, :, :], axis=2))
            d[:, flat] = near[:, flat]
        # only s strictly between i and j counts
        d[ss[:, None] >= js[None, :]] = 0.0
        feasible[i, js] = d.max(axis=0) <= epsilon + SLACK
    best = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    best[0] = 1
    for j in range(1, n):
        prev = best[:j][feasible[:j, j]]
        best[j] = prev.min() + 1
    return int(best[-1])


def _tree_path_lengths(tree: EmbeddedGraph, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Length of the tree path between each pair ``(us[k], vs[k])``."""
    from scipy.sparse.csgraph import breadth_first_order

    n = tree.n_vertices
    adj = _csr(tree)
    order, pred = breadth_first_order(adj, int(us[0]), directed=False)
    dist = np.zeros(n)
    level = np.zeros(n, dtype=np.int64)
    w = {}
    for (a, b), length in zip(tree.edges.tolist(), tree.lengths.tolist()):
        w[(a, b)] = length
    for v in order[1:].tolist():
        p = int(pred[v])
        dist[v] = dist[p] + w[(min(p, v), max(p, v))]
        level[v] = level[p] + 1
    out = np.empty(len(us))
    for k, (u, v) in enumerate(zip(us.tolist(), vs.tolist())):
        a, b = u, v
        while a != b:
            if level[a] >= level[b]:
                a = int(pred[a])
            else:
                b = int(pred[b])
        out[k] = dist[u] + dist[v] - 2 * dist[a]
    return out


def _csr(tree: EmbeddedGraph):
    from scipy.sparse import coo_matrix

    n = tree.n_vertices
    e = tree.edges
    return coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()


def prune_leaf_branches(graph: EmbeddedGraph, provenance: list, threshold: float):
    """Repeatedly drop the shortest leaf branch whose tip lies within
    ``threshold`` of its junction.

    A leaf branch runs from a degree-1 vertex to the first vertex of degree
    at least 3.  Paths (two leaves) are never pruned.  Returns the pruned graph,
    its provenance and the number of branches removed.
    """
    adj = [set() for _ in range(graph.n_vertices)]
    for u, v in graph.edges.tolist():
        adj[u].add(v)
        adj[v].add(u)
    alive = np.ones(graph.n_vertices, dtype=bool)
    removed = 0
    while True:
        leaves = [v for v in range(graph.n_vertices) if alive[v] and len(adj[v]) == 1]
        if len(leaves) <= 2:
            break
        best = None
        for leaf in leaves:
            chain = [leaf]
            prev, cur = leaf, next(iter(adj[leaf]))
            while len(adj[cur]) == 2:
                chain.append(cur)
                prev, cur = cur, next(y for y in adj[cur] if y != prev)
            if len(adj[cur]) < 3:
                continue
            reach = float(np.linalg.norm(graph.vertices[chain] - graph.vertices[cur], axis=1).max())
            if reach < threshold and (best is None or (reach, leaf) < best[:2]):
                best = (reach, leaf, chain, cur, prev)
        if best is None:
            break
        _, _, chain, junction, last = best
        adj[junction].discard(last)
        for v in chain:
            for y in adj[v]:
                if y != junction:
                    adj[y].discard(v)
            adj[v].clear()
            alive[v] = False
        removed += 1
    keep = np.flatnonzero(alive)
    index = -np.ones(graph.n_vertices, dtype=np.int64)
    index[keep] = np.arange(len(keep))
    edges = sorted({(min(index[u], index[v]), max(index[u], index[v])) for u in keep.tolist() for v in adj[u]})
    out = EmbeddedGraph(graph.vertices[keep], np.array(edges, dtype=np.int64).reshape(-1, 2))
    return out, [provenance[k] for k in keep.tolist()], removed


def assemble_skeleton(
    cloud: PointCloud,
    core: CoreTree,
    runs: list[MonotoneRun],
    indices: list[list[int]],
    params: ApproxParams,
    avg_edge_length: float,
    mst_tree: EmbeddedGraph | None = None,
) -> Skeleton:
    """Join the run polylines into one tree and collapse short-edge clusters.

    Edges longer than ``beta * l(C)`` are set aside, every component of the
    remaining short edges is replaced by its centroid, and the long edges are
    put back between the centroids.
    """
    pair_set = set()
    for run, ind in zip(runs, indices):
        rows = run.rows[ind].tolist()
        for u, v in zip(rows, rows[1:]):
            if u != v:
                pair_set.add((min(u, v), max(u, v)))
    vertex_rows = sorted({r for pair in pair_set for r in pair})
    if not vertex_rows:
        vertex_rows = [int(core.vertices[0])]
    index_of = {r: k for k, r in enumerate(vertex_rows)}
    edges = np.array([(index_of[u], index_of[v]) for u, v in sorted(pair_set)], dtype=np.int64).reshape(-1, 2)
    rows = np.array(vertex_rows, dtype=np.int64)
    pre = EmbeddedGraph(cloud.points[rows], edges)
    if not pre.is_forest():
        raise GraphError("assembled skeleton contains a cycle")

    threshold = params.beta * avg_edge_length
    if params.collapse_metric == "tree" and mst_tree is not None and len(edges):
        measure = _tree_path_lengths(mst_tree, rows[edges[:, 0]], rows[edges[:, 1]])
    else:
        measure = pre.lengths
    short = measure <= threshold
    if len(edges) and short.all() and pre.is_tree():
        # collapsing would leave a single point; keep the polyline instead
        short = np.zeros(len(edges), dtype=bool)
    short_graph = EmbeddedGraph(pre.vertices, pre.edges[short])
    n_comp, labels = short_graph.component_labels()
    # number components by their smallest member for a stable vertex order
    first_member = np.full(n_comp, pre.n_vertices, dtype=np.int64)
    np.minimum.at(first_member, labels, np.arange(pre.n_vertices))
    relabel = np.empty(n_comp, dtype=np.int64)
    relabel[np.argsort(first_member, kind="stable")] = np.arange(n_comp)
    labels = relabel[labels]

    verts = np.zeros((n_comp, pre.vertices.shape[1]))
    provenance: list = []
    radius = 0.0
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        if len(members) == 1:
            verts[c] = pre.vertices[members[0]]
            provenance.append(int(cloud.ids[rows[members[0]]]))
        else:
            centre = pre.vertices[members].mean(axis=0)
            verts[c] = centre
            provenance.append({"centroid_of": sorted(int(i) for i in cloud.ids[rows[members]])})
            radius = max(radius, float(np.linalg.norm(pre.vertices[members] - centre, axis=1).max()))

    long_pairs = set()
    for u, v in pre.edges[~short].tolist():
        a, b = labels[u], labels[v]
        if a != b:
            long_pairs.add((min(a, b), max(a, b)))
    graph = EmbeddedGraph(verts, np.array(sorted(long_pairs), dtype=np.int64).reshape(-1, 2))
    return Skeleton(graph=graph, provenance=provenance, pre_collapse=pre, pre_collapse_rows=rows,
                    collapse_radius=radius)


@dataclass
class PipelineResult:
    """Everything the pipeline produced for one connected cluster."""

    cloud: PointCloud
    params: ApproxParams
    mst: MstResult
    depths: DepthTable
    deep: np.ndarray
    core: CoreTree
    runs: list[MonotoneRun]
    indices: list[list[int]]
    initial_error: float
    epsilon: float
    skeleton: Skeleton
    stats: SearchStats
    timings: dict = field(default_factory=dict)


@contextmanager
def gc_paused():
    """Suspend the cyclic garbage collector.

    The stages allocate many short-lived lists and tuples but no reference
    cycles; left on, the collector rescans the growing heap and makes the
    running time grow faster than the cloud.
    """
    was_on = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_on:
            gc.enable()


def run_pipeline(cloud: PointCloud, params: ApproxParams, mst: MstResult | None = None,
                 mst_ms: float | None = None) -> PipelineResult:
    """All stages on a single cluster.  ``mst`` may be supplied to reuse a tree
    built earlier for the same cloud; ``mst_ms`` then records its build time."""
    if len(cloud) < 2:
        raise GeometryError("need at least two points")
    with gc_paused():
        return _run_pipeline(cloud, params, mst, mst_ms)


def _run_pipeline(cloud: PointCloud, params: ApproxParams, mst: MstResult | None,
                  mst_ms: float | None) -> PipelineResult:
    timings = {}
    clock = time.perf_counter

    t0 = clock()
    if mst is None:
        mst = build_mst(cloud)
        timings["mst"] = (clock() - t0) * 1e3
    else:
        timings["mst"] = float(mst_ms or 0.0)

    t0 = clock()
    depths = compute_depths(mst.tree)
    deep = deep_vertices(depths, params.beta, mst.avg_edge_length)
    timings["depth"] = (clock() - t0) * 1e3

    t0 = clock()
    core = extract_core(mst, deep, params.beta)
    timings["core"] = (clock() - t0) * 1e3

    t0 = clock()
    turn_tol = params.turn_tolerance
    if turn_tol is None:
        turn_tol = params.beta * mst.avg_edge_length
    clouds = edge_clouds(cloud.points, core)
    runs: list[MonotoneRun] = []
    for p, path in enumerate(core.paths):
        runs.extend(split_monotone(path, clouds, core, turn_tolerance=turn_tol, source_path=p))
    timings["monotone"] = (clock() - t0) * 1e3

    t0 = clock()
    err0 = initial_error(core, runs)
    eps = params.gamma * err0
    stats = SearchStats()
    indices = [approximate_run(run, eps, stats) for run in runs]
    timings["straighten"] = (clock() - t0) * 1e3

    t0 = clock()
    skeleton = assemble_skeleton(cloud, core, runs, indices, params, mst.avg_edge_length, mst.tree)
    if params.prune_factor > 0:
        graph, prov, k = prune_leaf_branches(skeleton.graph, skeleton.provenance, params.prune_factor * eps)
        skeleton = replace(skeleton, graph=graph, provenance=prov, pruned_branches=k)
    timings["assemble"] = (clock() - t0) * 1e3
    timings["total"] = sum(timings.values())

    return PipelineResult(
        cloud=cloud, params=params, mst=mst, depths=depths, deep=deep, core=core, runs=runs,
        indices=indices, initial_error=err0, epsilon=eps, skeleton=skeleton, stats=stats,
        timings=timings,
    )


def _merge_skeletons(parts: list[Skeleton]) -> Skeleton:
    verts, edges, prov, pre_v, pre_e, pre_rows = [], [], [], [], [], []
    offset = pre_offset = 0
    radius = 0.0
    for sk in parts:
        verts.append(sk.graph.vertices)
        edges.append(sk.graph.edges + offset)
        prov.extend(sk.provenance)
        offset += sk.graph.n_vertices
        pre_v.append(sk.pre_collapse.vertices)
        pre_e.append(sk.pre_collapse.edges + pre_offset)
        pre_rows.append(sk.pre_collapse_rows)
        pre_offset += sk.pre_collapse.n_vertices
        radius = max(radius, sk.collapse_radius)
    return Skeleton(
        graph=EmbeddedGraph(np.concatenate(verts), np.concatenate(edges)),
        provenance=prov,
        pre_collapse=EmbeddedGraph(np.concatenate(pre_v), np.concatenate(pre_e)),
        pre_collapse_rows=np.concatenate(pre_rows),
        collapse_radius=radius,
        pruned_branches=sum(sk.pruned_branches for sk in parts),
    )


def _single_point_skeleton(cloud: PointCloud) -> Skeleton:
    g = EmbeddedGraph(cloud.points[:1], np.zeros((0, 2), dtype=np.int64))
    return Skeleton(graph=g, provenance=[int(cloud.ids[0])], pre_collapse=g,
                    pre_collapse_rows=np.zeros(1, dtype=np.int64))


def build_ask(cloud: PointCloud, beta: float = DEFAULT_BETA, gamma: float = DEFAULT_GAMMA,
              kappa: float = math.inf, turn_tolerance: float | None = None,
              collapse_metric: str = "tree", prune_factor: float = 0.0,
              mst: MstResult | None = None, mst_ms: float | None = None):
    """Approximate skeleton of ``cloud`` and its run report.

    With a finite ``kappa`` the cloud is first split by single-edge clustering
    and every cluster is skeletonised on its own; the result is then a forest.
    """
    from .metrics import make_report

    params = ApproxParams(beta=beta, gamma=gamma, kappa=kappa, turn_tolerance=turn_tolerance,
                          collapse_metric=collapse_metric, prune_factor=prune_factor)
    if len(cloud) < 2:
        raise GeometryError("need at least two points")
    if math.isinf(kappa):
        result = run_pipeline(cloud, params, mst=mst, mst_ms=mst_ms)
        return result.skeleton, make_report(cloud, [result], params)

    t0 = time.perf_counter()
    full = mst if mst is not None else build_mst(cloud)
    split_ms = (time.perf_counter() - t0) * 1e3
    results, parts = [], []
    for sub in split_clusters(full, kappa):
        if len(sub) < 2:
            parts.append(_single_point_skeleton(sub))
            continue
        res = run_pipeline(sub, params)
        results.append(res)
        parts.append(res.skeleton)
    skeleton = _merge_skeletons(parts)
    report = make_report(cloud, results, params, skeleton=skeleton, extra_ms={"clusters": split_ms})
    return skeleton, report
