"""Points, segments and the two point-to-segment distances used by the pipeline.

Points are plain 1-D float arrays of length ``m``; a cloud is an ``(n, m)``
array together with the original point ids.  Two distances are provided:

* the ordinary Euclidean distance from a point to a segment, and
* the *slab* distance, measured inside the hyperplane through the point that
  is orthogonal to a reference axis.  The slab distance is what the
  straightening step uses on projection-ordered runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "TOL",
    "GeometryError",
    "Segment",
    "PointCloud",
    "euclid_point_segment",
    "euclid_points_segment",
    "projection_parameter",
    "slab_distance",
    "slab_distances",
    "segment_cloud_distance",
]

# degeneracy threshold for coordinates of order ~100
TOL = 1e-9


class GeometryError(ValueError):
    """Malformed geometric input (dimension mismatch, degenerate axis, ...)."""


class Segment(NamedTuple):
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class PointCloud:
    """An ordered cloud with stable original ids.

    ``ids`` survive every reordering and sub-clouding so that skeleton
    vertices can always be traced back to input rows.
    """

    points: np.ndarray
    ids: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise GeometryError("a cloud needs a nonempty (n, m) array of points")
        if pts.shape[1] < 2:
            raise GeometryError(f"dimension must be at least 2, got {pts.shape[1]}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("cloud contains non-finite coordinates")
        ids = np.asarray(self.ids, dtype=np.int64)
        if ids.shape != (pts.shape[0],):
            raise GeometryError("ids must have one entry per point")
        if len(np.unique(ids)) != len(ids):
            raise GeometryError("ids must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_points(cls, points) -> "PointCloud":
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.arange(len(pts), dtype=np.int64))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, rows) -> "PointCloud":
        rows = np.asarray(rows, dtype=np.int64)
        return PointCloud(self.points[rows], self.ids[rows])


def _check_dims(*arrays: np.ndarray) -> None:
    m = arrays[0].shape[-1]
    for arr in arrays[1:]:
        if arr.shape[-1] != m:
            raise GeometryError(f"dimension mismatch: {m} vs {arr.shape[-1]}")


def euclid_point_segment(p, s: Segment) -> float:
    """Euclidean distance from ``p`` to the closed segment ``s``."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(s.a, dtype=float)
    b = np.asarray(s.b, dtype=float)
    _check_dims(p, a, b)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= TOL * TOL:
        return float(np.linalg.norm(p - a))
    t = min(1.0, max(0.0, float((p - a) @ ab) / denom))
    return float(np.linalg.norm(p - (a + t * ab)))


def euclid_points_segment(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised :func:`euclid_point_segment` over the rows of ``points``."""
    points = np.asarray(points, dtype=float)
    _check_dims(points, a, b)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= TOL * TOL:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)


def projection_parameter(p, axis: Segment) -> float:
    """Affine coordinate ``t`` of the orthogonal projection of ``p`` on ``axis``.

    ``t = 0`` at ``axis.a`` and ``t = 1`` at ``axis.b``; values outside
    ``[0, 1]`` are returned as is.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(axis.a, dtype=float)
    b = np.asarray(axis.b, dtype=float)
    _check_dims(p, a, b)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= TOL * TOL:
        raise GeometryError("projection axis has zero length")
    return float((p - a) @ ab) / denom


def slab_distance(p_s, seg: Segment, axis: Segment) -> float:
    """Distance from ``p_s`` to ``seg`` inside the hyperplane through ``p_s``
    orthogonal to ``axis``.

    The foot is ``seg.a + u (seg.b - seg.a)`` with ``u`` the relative position
    of ``p_s`` between the endpoints' axis parameters.  ``u`` is clamped to
    ``[0, 1]``; callers are expected to pass points lying strictly between the
    endpoints along the axis.  When the endpoints share an axis parameter the
    hyperplane section is undefined and the nearer endpoint is used instead.
    """
    p_s = np.asarray(p_s, dtype=float)
    a = np.asarray(seg.a, dtype=float)
    b = np.asarray(seg.b, dtype=float)
    t_s = projection_parameter(p_s, axis)
    t_a = projection_parameter(a, axis)
    t_b = projection_parameter(b, axis)
    if abs(t_b - t_a) < TOL:
        return float(min(np.linalg.norm(p_s - a), np.linalg.norm(p_s - b)))
    u = min(1.0, max(0.0, (t_s - t_a) / (t_b - t_a)))
    return float(np.linalg.norm(p_s - (a + u * (b - a))))


def slab_distances(points: np.ndarray, params: np.ndarray, i: int, j: int) -> np.ndarray:
    """Slab distances of ``points[i+1:j]`` to the chord ``[points[i], points[j]]``.

    ``params`` are the axis parameters of ``points`` (as stored on a run).
    """
    inner = points[i + 1 : j]
    if inner.shape[0] == 0:
        return np.zeros(0)
    a, b = points[i], points[j]
    dt = params[j] - params[i]
    if abs(dt) < TOL:
        da = np.linalg.norm(inner - a, axis=1)
        db = np.linalg.norm(inner - b, axis=1)
        return np.minimum(da, db)
    u = np.clip((params[i + 1 : j] - params[i]) / dt, 0.0, 1.0)
    return np.linalg.norm(inner - (a + u[:, None] * (b - a)), axis=1)


def segment_cloud_distance(seg_indices: tuple[int, int], run) -> float:
    """Max slab distance from the run points strictly between ``i`` and ``j``
    to the chord ``[p_i, p_j]``; zero when there are none.

    ``run`` is anything exposing ``points`` (projection-ordered) and
    ``params`` (their parameters along the run axis).
    """
    i, j = seg_indices
    n = len(run.points)
    if not (0 <= i < j < n):
        raise GeometryError(f"segment indices {seg_indices} out of range for a run of {n} points")
    d = slab_distances(run.points, run.params, i, j)
    return float(d.max()) if d.size else 0.0
