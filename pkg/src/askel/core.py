"""The core subtree: long paths of the MST between and around deep vertices.

Removing the deep vertices splits the MST into subtrees.  A subtree touching
two deep vertices contributes the unique path joining them; a subtree touching
one deep vertex contributes its longest path out of that vertex, provided the
path is longer than ``beta * l(C)``.  Without any deep vertex the core is the
MST diameter path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import segment_cloud_distance
from .mst import EmbeddedGraph, GraphError, MstResult

__all__ = ["CoreTree", "extract_core", "initial_error", "deep_components", "diameter_path"]


@dataclass(frozen=True)
class CoreTree:
    """A subtree of the MST.

    ``tree`` keeps every cloud point as a vertex (so indices agree with the
    MST) but only the core edges; ``vertices`` lists the indices actually
    touched by the core.
    """

    tree: EmbeddedGraph
    vertices: np.ndarray
    fixed_vertices: np.ndarray
    paths: list[list[int]]
    ids: np.ndarray


def _farthest(adj, start: int, ids: np.ndarray, allowed=None) -> tuple[list[int], float]:
    """Longest path from ``start`` (ties: smaller far-end id)."""
    dist = {start: 0.0}
    parent = {start: -1}
    stack = [start]
    while stack:
        x = stack.pop()
        for y, w in adj[x]:
            if y in dist or (allowed is not None and y not in allowed):
                continue
            dist[y] = dist[x] + w
            parent[y] = x
            stack.append(y)
    far = min(dist, key=lambda v: (-dist[v], ids[v]))
    path = [far]
    while parent[path[-1]] != -1:
        path.append(parent[path[-1]])
    path.reverse()
    return path, dist[far]


def diameter_path(tree: EmbeddedGraph, ids: np.ndarray) -> list[int]:
    """Weighted diameter by double sweep from the lowest-id vertex."""
    adj = tree.adjacency()
    start = int(np.argmin(ids))
    first, _ = _farthest(adj, start, ids)
    path, _ = _farthest(adj, first[-1], ids)
    return path


def deep_components(tree: EmbeddedGraph, deep) -> list[tuple[list[int], list[tuple[int, int]]]]:
    """Components of ``tree`` minus ``deep``.

    Each item is ``(vertices, attachments)`` where ``attachments`` lists the
    ``(deep_vertex, component_vertex)`` edges joining the component to its
    closure.
    """
    adj = tree.adjacency()
    is_deep = np.zeros(tree.n_vertices, dtype=bool)
    is_deep[np.asarray(deep, dtype=np.int64)] = True
    label = np.full(tree.n_vertices, -1, dtype=np.int64)
    comps = []
    for s in range(tree.n_vertices):
        if is_deep[s] or label[s] >= 0:
            continue
        members = [s]
        attach = []
        label[s] = len(comps)
        for x in members:
            for y, _ in adj[x]:
                if is_deep[y]:
                    attach.append((y, x))
                elif label[y] < 0:
                    label[y] = len(comps)
                    members.append(y)
        comps.append((members, attach))
    return comps


def _path_between(adj, a: int, b: int, allowed: set[int]) -> list[int]:
    parent = {a: -1}
    queue = [a]
    for x in queue:
        if x == b:
            break
        for y, _ in adj[x]:
            if y not in parent and (y in allowed or y == b):
                parent[y] = x
                queue.append(y)
    path = [b]
    while parent[path[-1]] != -1:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def _split_paths(n: int, edges: np.ndarray, breaks: set[int]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges.tolist():
        adj[u].append(v)
        adj[v].append(u)
    paths = []
    for b in sorted(breaks):
        for nxt in sorted(adj[b]):
            path = [b, nxt]
            while path[-1] not in breaks:
                cur, prev = path[-1], path[-2]
                path.append(next(y for y in adj[cur] if y != prev))
            if (path[0], path[1]) < (path[-1], path[-2]):
                paths.append(path)
    return paths


def extract_core(mst: MstResult, deep, beta: float) -> CoreTree:
    tree = mst.tree
    ids = mst.cloud.ids
    adj = tree.adjacency()
    threshold = beta * mst.avg_edge_length
    deep = np.asarray(sorted(int(d) for d in deep), dtype=np.int64)
    deep_set = set(deep.tolist())

    pieces: list[list[int]] = []
    fixed: set[int] = set(deep_set)
    if not deep_set:
        path = diameter_path(tree, ids)
        pieces.append(path)
        fixed.update((path[0], path[-1]))
    else:
        for members, attach in deep_components(tree, deep):
            closure = sorted({d for d, _ in attach})
            allowed = set(members)
            if len(closure) == 2:
                pieces.append(_path_between(adj, closure[0], closure[1], allowed))
            elif len(closure) == 1:
                d = closure[0]
                (_, s), = attach
                # the root edge is forced, then search inside the component
                sub_path, length = _farthest(adj, s, ids, allowed)
                w = next(w for y, w in adj[d] if y == s)
                if length + w > threshold:
                    pieces.append([d] + sub_path)
                    fixed.add(sub_path[-1])
            else:
                raise GraphError(
                    f"a component touches {len(closure)} deep vertices; at most 2 are possible"
                )
        # deep neighbours joined directly by an MST edge
        for u, v in tree.edges.tolist():
            if u in deep_set and v in deep_set:
                pieces.append([u, v])

    core_edges = set()
    for path in pieces:
        for u, v in zip(path, path[1:]):
            core_edges.add((min(u, v), max(u, v)))
    edges = np.array(sorted(core_edges), dtype=np.int64).reshape(-1, 2)
    core_graph = EmbeddedGraph(tree.vertices, edges)
    touched = np.unique(edges) if len(edges) else np.array(sorted(fixed), dtype=np.int64)
    deg = core_graph.degrees()
    breaks = set(fixed) | {int(v) for v in touched if deg[v] != 2}
    paths = _split_paths(tree.n_vertices, edges, breaks)
    return CoreTree(
        tree=core_graph,
        vertices=touched,
        fixed_vertices=np.array(sorted(fixed), dtype=np.int64),
        paths=paths,
        ids=ids,
    )


def initial_error(core: CoreTree, runs) -> float:
    """Largest chord error over all monotone runs of the core."""
    err = 0.0
    for run in runs:
        if len(run.points) >= 2:
            err = max(err, segment_cloud_distance((0, len(run.points) - 1), run))
    return err
