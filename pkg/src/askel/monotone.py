"""Edge-clouds of the core and their split into projection-monotone runs.

Every cloud point is attached to its nearest core edge.  Each core path
between fixed vertices is then cut where its vertices stop advancing along
the line through the path's endpoints, and the points attached to each piece
are ordered by projection onto the piece's own chord.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import CoreTree
from .geometry import TOL, GeometryError, Segment

__all__ = ["MonotoneRun", "make_run", "edge_clouds", "monotone_breakpoints", "split_monotone"]

_CHUNK = 1 << 21


@dataclass(frozen=True)
class MonotoneRun:
    """Projection-ordered points with their anchor chord.

    ``points[0]`` and ``points[-1]`` are the anchors and span ``axis``.
    ``params`` holds each point's axis parameter clamped to ``[0, 1]`` and is
    non-decreasing.  ``overhang`` counts interior points whose raw parameter
    fell outside the chord before clamping; ``vertex_monotone`` records
    whether the core vertices of the piece advance monotonically along it.
    """

    points: np.ndarray
    rows: np.ndarray
    ids: np.ndarray
    params: np.ndarray
    axis: Segment
    source_path: int = -1
    overhang: int = 0
    vertex_monotone: bool = True

    def __len__(self) -> int:
        return self.points.shape[0]


def _raw_params(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    ab = b - a
    denom = float(ab @ ab)
    if denom <= TOL * TOL:
        return None
    return (points - a) @ ab / denom


def make_run(points, ids=None, rows=None, source_path: int = -1, vertex_monotone: bool = True) -> MonotoneRun:
    """Build a run anchored at the first and last of ``points``.

    Interior points are sorted by (clamped parameter, id).
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        raise GeometryError("a run needs at least two points")
    ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
    rows = ids.copy() if rows is None else np.asarray(rows, dtype=np.int64)
    a, b = pts[0], pts[-1]
    raw = _raw_params(pts[1:-1], a, b)
    if raw is None:
        inner_t = np.zeros(n - 2)
        overhang = 0
    else:
        overhang = int(np.sum((raw < -TOL) | (raw > 1 + TOL)))
        inner_t = np.clip(raw, 0.0, 1.0)
    order = np.lexsort((ids[1:-1], inner_t)) + 1
    perm = np.concatenate([[0], order, [n - 1]])
    params = np.concatenate([[0.0], inner_t[order - 1], [1.0]])
    return MonotoneRun(
        points=pts[perm],
        rows=rows[perm],
        ids=ids[perm],
        params=params,
        axis=Segment(a.copy(), b.copy()),
        source_path=source_path,
        overhang=overhang,
        vertex_monotone=vertex_monotone,
    )


def _segment_sq_dists(P: np.ndarray, A: np.ndarray, AB: np.ndarray) -> np.ndarray:
    """Squared distance of ``P[k]`` to segment ``(A[k], A[k] + AB[k])``."""
    denom = (AB * AB).sum(axis=1)
    rel = P - A
    safe = np.where(denom > TOL * TOL, denom, 1.0)
    t = np.where(denom > TOL * TOL, (rel * AB).sum(axis=1) / safe, 0.0)
    diff = rel - np.clip(t, 0.0, 1.0)[:, None] * AB
    return (diff * diff).sum(axis=1)


def edge_clouds(points: np.ndarray, core: CoreTree) -> dict[tuple[int, int], np.ndarray]:
    """Assign every point row to its nearest core edge (ties: lower edge row).

    Returns ``{(u, v): rows}`` over the core's edges, ``u < v``.

    Exact: a point whose nearest core vertex is at distance ``d`` can only be
    closer than ``d`` to edges with an endpoint within ``d + L`` of it, where
    ``L`` is the longest core edge, so only those edges are compared.
    """
    points = np.asarray(points, dtype=float)
    edges = core.tree.edges
    if len(edges) == 0:
        raise GeometryError("core has no edges")
    verts = core.tree.vertices
    cv = np.unique(edges)
    kd = cKDTree(verts[cv])
    d0, _ = kd.query(points)
    reach = d0 + float(core.tree.lengths.max()) + TOL

    # incident edges per core vertex, CSR style
    local = np.searchsorted(cv, edges)
    inc_v = np.concatenate([local[:, 0], local[:, 1]])
    inc_e = np.concatenate([np.arange(len(edges)), np.arange(len(edges))])
    order = np.argsort(inc_v, kind="stable")
    inc_e = inc_e[order]
    start = np.searchsorted(inc_v[order], np.arange(len(cv) + 1))

    near = kd.query_ball_point(points, reach)
    counts = np.fromiter((len(x) for x in near), dtype=np.int64, count=len(near))
    pv = np.fromiter((v for x in near for v in x), dtype=np.int64, count=int(counts.sum()))
    pp = np.repeat(np.arange(len(points)), counts)
    # expand every (point, vertex) pair into (point, incident edge) pairs
    deg = start[pv + 1] - start[pv]
    pt_idx = np.repeat(pp, deg)
    offs = np.arange(int(deg.sum())) - np.repeat(np.cumsum(deg) - deg, deg)
    cand = inc_e[np.repeat(start[pv], deg) + offs]
    A = verts[edges[cand, 0]]
    d = _segment_sq_dists(points[pt_idx], A, verts[edges[cand, 1]] - A)
    # per point: smallest distance, then lowest edge row
    order = np.lexsort((cand, d, pt_idx))
    first = np.ones(len(order), dtype=bool)
    first[1:] = pt_idx[order][1:] != pt_idx[order][:-1]
    assign = np.empty(len(points), dtype=np.int64)
    assign[pt_idx[order][first]] = cand[order][first]

    by_edge = np.argsort(assign, kind="stable")
    bounds = np.searchsorted(assign[by_edge], np.arange(len(edges) + 1))
    out = {}
    for e, (u, v) in enumerate(edges.tolist()):
        out[(u, v)] = by_edge[bounds[e] : bounds[e + 1]]
    return out


def _edge_clouds_brute(points: np.ndarray, core: CoreTree) -> np.ndarray:
    """Reference assignment by comparing every point with every edge."""
    points = np.asarray(points, dtype=float)
    edges = core.tree.edges
    verts = core.tree.vertices
    A = verts[edges[:, 0]]
    AB = verts[edges[:, 1]] - A
    step = max(1, _CHUNK // (len(edges) * points.shape[1]))
    assign = np.empty(len(points), dtype=np.int64)
    for lo in range(0, len(points), step):
        P = points[lo : lo + step]
        k = len(P)
        d = _segment_sq_dists(np.repeat(P, len(edges), axis=0), np.tile(A, (k, 1)), np.tile(AB, (k, 1)))
        assign[lo : lo + step] = np.argmin(d.reshape(k, len(edges)), axis=1)
    return assign


def monotone_breakpoints(values, tolerance: float = 0.0) -> list[int]:
    """Cut positions splitting ``values`` into alternating monotone stretches.

    A stretch keeps going while values do not move back against its direction
    by more than ``tolerance``; it is cut at its running extreme.  With zero
    tolerance the interior cuts are exactly the strict local extrema (plateaus
    cut at their last element).  The first and last positions are always
    included.
    """
    s = np.asarray(values, dtype=float)
    k = len(s)
    if k < 2:
        raise GeometryError("need at least two values")
    cuts = [0]
    start = 0
    direction = 0
    ext = 0
    for i in range(1, k):
        if direction == 0:
            if s[i] - s[start] > tolerance:
                direction = 1
            elif s[start] - s[i] > tolerance:
                direction = -1
            else:
                continue
            seg = s[start : i + 1]
            pick = np.flatnonzero(seg == (seg.max() if direction > 0 else seg.min()))[-1]
            ext = start + int(pick)
            continue
        if direction * (s[i] - s[ext]) >= 0:
            ext = i
        elif direction * (s[ext] - s[i]) > tolerance:
            cuts.append(ext)
            start = ext
            direction = -direction
            seg = s[start : i + 1]
            pick = np.flatnonzero(seg == (seg.max() if direction > 0 else seg.min()))[-1]
            ext = start + int(pick)
    if cuts[-1] != k - 1:
        cuts.append(k - 1)
    return cuts


def split_monotone(
    path: list[int],
    clouds: dict[tuple[int, int], np.ndarray],
    core: CoreTree,
    turn_tolerance: float = 0.0,
    source_path: int = -1,
) -> list[MonotoneRun]:
    """Cut one core path into runs and collect their points.

    The path's vertices are projected on the line through its endpoints and
    cut by :func:`monotone_breakpoints`.  A piece's run holds the points of
    the edge-clouds along it, anchored at the piece's end vertices, which are
    shared with the neighbouring pieces.
    """
    if len(path) < 2:
        raise GeometryError("a core path has at least two vertices")
    verts = core.tree.vertices
    ids = core.ids
    pv = verts[path]
    raw = _raw_params(pv, pv[0], pv[-1])
    if raw is None:
        cuts = [0, len(path) - 1]
    else:
        length = float(np.linalg.norm(pv[-1] - pv[0]))
        cuts = monotone_breakpoints(raw * length, turn_tolerance)

    runs = []
    for c0, c1 in zip(cuts, cuts[1:]):
        first, last = path[c0], path[c1]
        inner = []
        for u, v in zip(path[c0:c1], path[c0 + 1 : c1 + 1]):
            inner.append(clouds[(min(u, v), max(u, v))])
        inner = np.concatenate(inner) if inner else np.zeros(0, dtype=np.int64)
        inner = np.unique(inner)
        inner = inner[(inner != first) & (inner != last)]
        rows = np.concatenate([[first], inner, [last]]).astype(np.int64)

        sub = _raw_params(verts[path[c0 : c1 + 1]], verts[first], verts[last])
        mono = True if sub is None else bool(np.all(np.diff(sub) >= -TOL))
        runs.append(
            make_run(verts[rows], ids=ids[rows], rows=rows, source_path=source_path, vertex_monotone=mono)
        )
    return runs
