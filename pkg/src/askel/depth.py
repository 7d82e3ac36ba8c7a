"""Branch depths of tree vertices and the deep-vertex filter.

For a vertex ``v`` of degree ``k >= 3`` let ``l_1 >= ... >= l_k`` be the
lengths of the longest paths leaving ``v`` into each of its branches.  The
depth of ``v`` is ``l_3``: it is large only where three long arms meet.
Vertices of degree one or two have depth zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mst import EmbeddedGraph, GraphError

__all__ = ["DepthTable", "compute_depths", "brute_force_depths", "deep_vertices"]


@dataclass(frozen=True)
class DepthTable:
    depth: np.ndarray
    branch_lengths: list[list[float]]


def _rooted_order(adj, root: int = 0):
    n = len(adj)
    parent = np.full(n, -1, dtype=np.int64)
    parent_w = np.zeros(n)
    order = [root]
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    for v in order:
        for u, w in adj[v]:
            if not seen[u]:
                seen[u] = True
                parent[u] = v
                parent_w[u] = w
                order.append(u)
    return order, parent, parent_w


def compute_depths(tree: EmbeddedGraph) -> DepthTable:
    """Depth of every vertex of ``tree`` in O(n).

    Longest downward paths are collected leaves-up, then the longest path
    through each vertex's parent is pushed root-down, so every vertex sees
    one value per incident branch.
    """
    if not tree.is_tree():
        raise GraphError("depths are defined on trees only")
    n = tree.n_vertices
    adj = tree.adjacency()
    order, parent, parent_w = _rooted_order(adj)

    down = np.zeros(n)
    for v in reversed(order):
        p = parent[v]
        if p >= 0:
            down[p] = max(down[p], parent_w[v] + down[v])

    up = np.zeros(n)
    for v in order:
        # top two child contributions at v, for handing "the rest" to each child
        best1 = best2 = 0.0
        best1_child = -1
        for c, w in adj[v]:
            if c == parent[v]:
                continue
            val = w + down[c]
            if val > best1:
                best1, best2, best1_child = val, best1, c
            elif val > best2:
                best2 = val
        above = up[v] if parent[v] >= 0 else 0.0
        for c, w in adj[v]:
            if c == parent[v]:
                continue
            other = best2 if c == best1_child else best1
            up[c] = w + max(above, other)

    depth = np.zeros(n)
    branches: list[list[float]] = []
    for v in range(n):
        vals = [w + down[c] for c, w in adj[v] if c != parent[v]]
        if parent[v] >= 0:
            vals.append(up[v])
        vals.sort(reverse=True)
        branches.append(vals)
        if len(vals) >= 3:
            depth[v] = vals[2]
    return DepthTable(depth=depth, branch_lengths=branches)


def brute_force_depths(tree: EmbeddedGraph) -> np.ndarray:
    """O(n^2) reference: for each branch at ``v`` search it from scratch."""
    if not tree.is_tree():
        raise GraphError("depths are defined on trees only")
    adj = tree.adjacency()
    depth = np.zeros(tree.n_vertices)
    for v in range(tree.n_vertices):
        if len(adj[v]) < 3:
            continue
        arms = []
        for u, w in adj[v]:
            far = 0.0
            stack = [(u, v, w)]
            while stack:
                x, came_from, dist = stack.pop()
                far = max(far, dist)
                for y, wy in adj[x]:
                    if y != came_from:
                        stack.append((y, x, dist + wy))
            arms.append(far)
        arms.sort(reverse=True)
        depth[v] = arms[2]
    return depth


def deep_vertices(depths: DepthTable, beta: float, l_avg: float) -> np.ndarray:
    """Sorted indices of vertices with depth strictly above ``beta * l_avg``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return np.flatnonzero(depths.depth > beta * l_avg)
