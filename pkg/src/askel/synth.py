"""Random N-stars in R^3 and noisy uniform samples around them.

Directions are drawn as whole sets and rejected until every pairwise angle
is at least pi/4.  For many arms whole sets almost never pass, so after a
fixed budget the directions are drawn one at a time instead, each rejected
while it is too close to an accepted one.  Samples are uniform in the star's bounding box grown by
the noise radius, kept when within that radius of the star.

Randomness comes from numpy's PCG64 seeded with ``[seed, stream]`` so that
the directions and the sample use independent streams of one seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud
from .mst import EmbeddedGraph

__all__ = ["StarSpec", "RNG_ALGORITHM", "generate_star", "sample_cloud", "star_distances"]

RNG_ALGORITHM = "numpy.random.PCG64(SeedSequence([seed, stream]))"

_MIN_ANGLE = math.pi / 4
_SET_BATCH = 2048
_MAX_SETS = 1 << 18
_SEQ_TRIES = 10000
_POINT_BATCH = 16384


@dataclass(frozen=True)
class StarSpec:
    n_arms: int
    seed: int
    directions: np.ndarray
    edge_length: float = 100.0
    noise_radius: float = 10.0
    points_per_arm: int = 500
    min_angle: float = _MIN_ANGLE

    @property
    def n_points(self) -> int:
        return self.points_per_arm * self.n_arms

    def metadata(self) -> dict:
        return {
            "N": self.n_arms,
            "seed": self.seed,
            "center": [0.0, 0.0, 0.0],
            "directions": self.directions.tolist(),
            "edge_length": self.edge_length,
            "noise_radius": self.noise_radius,
            "points_per_star": self.n_points,
            "min_angle": self.min_angle,
            "rng": RNG_ALGORITHM,
        }


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), stream])))


def generate_star(n_arms: int, seed: int, edge_length: float = 100.0, noise_radius: float = 10.0,
                  points_per_arm: int = 500) -> tuple[EmbeddedGraph, StarSpec]:
    """Star with a centre at the origin and ``n_arms`` edges of ``edge_length``."""
    if n_arms < 2:
        raise ValueError("a star needs at least two arms")
    rng = _rng(seed, 0)
    cos_max = math.cos(_MIN_ANGLE)
    iu = np.triu_indices(n_arms, k=1)
    drawn = 0
    dirs = None
    while drawn < _MAX_SETS:
        d = rng.standard_normal((_SET_BATCH, n_arms, 3))
        d /= np.linalg.norm(d, axis=2, keepdims=True)
        gram = np.einsum("bik,bjk->bij", d, d)[:, iu[0], iu[1]]
        # tiny slack so that an exact pi/4 pair is not rejected by rounding
        ok = np.flatnonzero(np.all(gram <= cos_max + 1e-12, axis=1))
        if ok.size:
            dirs = d[ok[0]]
            break
        drawn += _SET_BATCH
    if dirs is None:
        dirs = _sequential_directions(rng, n_arms, cos_max)
    verts = np.vstack([np.zeros(3), edge_length * dirs])
    edges = np.array([(0, i) for i in range(1, n_arms + 1)], dtype=np.int64)
    spec = StarSpec(n_arms=n_arms, seed=int(seed), directions=dirs, edge_length=edge_length,
                    noise_radius=noise_radius, points_per_arm=points_per_arm)
    return EmbeddedGraph(verts, edges), spec


def _sequential_directions(rng: np.random.Generator, n_arms: int, cos_max: float) -> np.ndarray:
    for _ in range(1000):
        accepted: list[np.ndarray] = []
        misses = 0
        while len(accepted) < n_arms and misses < _SEQ_TRIES:
            v = rng.standard_normal(3)
            v /= np.linalg.norm(v)
            if all(float(v @ u) <= cos_max + 1e-12 for u in accepted):
                accepted.append(v)
                misses = 0
            else:
                misses += 1
        if len(accepted) == n_arms:
            return np.array(accepted)
    raise RuntimeError(f"no {n_arms} directions with pairwise angle >= pi/4")


def star_distances(points: np.ndarray, star: EmbeddedGraph) -> np.ndarray:
    best = np.full(len(points), np.inf)
    for u, v in star.edges.tolist():
        a, b = star.vertices[u], star.vertices[v]
        ab = b - a
        t = np.clip((points - a) @ ab / (ab @ ab), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(points - (a + t[:, None] * ab), axis=1))
    return best


def sample_cloud(star: EmbeddedGraph, spec: StarSpec) -> PointCloud:
    """``500 N`` points uniform in the grown bounding box and within the noise
    radius of the star."""
    rng = _rng(spec.seed, 1)
    r = spec.noise_radius
    lo = star.vertices.min(axis=0) - r
    hi = star.vertices.max(axis=0) + r
    need = spec.n_points
    kept = []
    have = 0
    while have < need:
        cand = rng.uniform(lo, hi, size=(_POINT_BATCH, 3))
        cand = cand[star_distances(cand, star) <= r]
        kept.append(cand)
        have += len(cand)
    pts = np.concatenate(kept)[:need]
    return PointCloud.from_points(pts)
