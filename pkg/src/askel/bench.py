"""Synthetic N-star sweep: success rates, timings and per-run guarantees.

Cloud ``i`` of size class ``N`` uses seed ``seed + 1000 * N + i``.  The MST of
a cloud is built once and shared by every beta; its build time is charged to
each beta's pipeline time so that per-row timings stay comparable with a
standalone run.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import segment_cloud_distance
from .metrics import evaluate, make_report
from .mst import build_mst
from .straighten import SLACK, ApproxParams, gc_paused, SearchStats, approximate_run, run_pipeline
from .synth import generate_star, sample_cloud

__all__ = [
    "CloudRow",
    "cloud_seed",
    "bench_cloud",
    "run_sweep",
    "aggregate",
    "stability",
    "worker_count",
    "COUNTER_C",
    "counter_budget",
    "CLOUD_FIELDS",
    "AGGREGATE_FIELDS",
]

# slab evaluations per run stay below c * n * log2(n) + c: a step of length g
# costs < 4g in the doubling phase plus < 2g per bisection round (at most
# log2 n rounds), and the step lengths sum to n - 1, so c = 8 covers n >= 2
COUNTER_C = 8.0


def counter_budget(n: int) -> float:
    return COUNTER_C * n * math.log2(max(n, 2)) + COUNTER_C


def cloud_seed(seed: int, n_arms: int, index: int) -> int:
    return int(seed) + 1000 * int(n_arms) + int(index)


@dataclass
class CloudRow:
    n_arms: int
    beta: float
    index: int
    seed: int
    n_points: int
    endpoint_count: int
    endpoint_success: bool
    homeo_success: bool
    signature: str
    time_ms: float
    mst_ms: float
    max_distance: float
    epsilon: float
    n_deep: int
    n_runs: int
    skeleton_vertices: int
    pre_vertex_offset: float
    pre_cloud_offset: float
    offset_violation: bool
    search_violations: int
    counter_violations: int
    max_counter_ratio: float


CLOUD_FIELDS = list(CloudRow.__dataclass_fields__)
AGGREGATE_FIELDS = [
    "n_arms",
    "beta",
    "clouds",
    "endpoint_success_pct",
    "homeo_success_pct",
    "mean_time_ms",
    "mean_max_distance",
    "beta_stability_pct",
]


def _check_runs(result) -> tuple[int, int, float]:
    """Search conditions (a), (b) and the work counter for every run of a pipeline."""
    eps = result.epsilon
    bad = over = 0
    worst = 0.0
    for run, ind in zip(result.runs, result.indices):
        n = len(run.points)
        for a, b in zip(ind, ind[1:]):
            if segment_cloud_distance((a, b), run) > eps + SLACK:
                bad += 1
            if b < n - 1 and not segment_cloud_distance((a, b + 1), run) > eps + SLACK:
                bad += 1
        stats = SearchStats()
        approximate_run(run, eps, stats)
        budget = counter_budget(n)
        worst = max(worst, stats.slab_evals / budget)
        over += stats.slab_evals > budget
    return bad, over, worst


def bench_cloud(n_arms: int, index: int, seed: int, betas, gamma: float, collapse_metric: str = "tree",
                prune_factor: float = 0.0, check: bool = True) -> list[CloudRow]:
    """All betas on one generated cloud."""
    s = cloud_seed(seed, n_arms, index)
    star, spec = generate_star(n_arms, s)
    cloud = sample_cloud(star, spec)
    with gc_paused():
        t0 = time.perf_counter()
        mst = build_mst(cloud)
        mst_ms = (time.perf_counter() - t0) * 1e3
    rows = []
    for beta in betas:
        params = ApproxParams(beta=beta, gamma=gamma, collapse_metric=collapse_metric, prune_factor=prune_factor)
        res = run_pipeline(cloud, params, mst=mst, mst_ms=mst_ms)
        report = make_report(cloud, [res], params)
        ev = evaluate(cloud, res.skeleton.graph, star)
        bad, over, worst = _check_runs(res) if check else (0, 0, 0.0)
        rows.append(
            CloudRow(
                n_arms=n_arms,
                beta=float(beta),
                index=index,
                seed=s,
                n_points=len(cloud),
                endpoint_count=ev["endpoint_count"],
                endpoint_success=bool(ev["endpoint_success"]),
                homeo_success=bool(ev["homeo_success"]),
                signature=report.signature,
                time_ms=report.stage_timings["total"],
                mst_ms=mst_ms,
                max_distance=ev["max_distance"],
                epsilon=res.epsilon,
                n_deep=len(res.deep),
                n_runs=len(res.runs),
                skeleton_vertices=res.skeleton.graph.n_vertices,
                pre_vertex_offset=report.pre_collapse_max_distance,
                pre_cloud_offset=report.pre_collapse_cloud_distance,
                offset_violation=bool(
                    report.pre_collapse_max_distance > 2 * res.epsilon
                    or report.pre_collapse_cloud_distance > 2 * res.epsilon
                ),
                search_violations=bad,
                counter_violations=over,
                max_counter_ratio=worst,
            )
        )
    return rows


def worker_count(requested: int | None = None) -> int:
    """Workers for a sweep: ``requested``, else ``ASK_THREADS``, else 1."""
    if requested is None:
        env = os.environ.get("ASK_THREADS", "").strip()
        requested = int(env) if env else 1
    if requested < 1:
        raise ValueError("worker count must be at least 1")
    return requested


def _job(args):
    return bench_cloud(*args)


def run_sweep(ns, count: int, betas=(20.0, 30.0, 40.0), seed: int = 0, gamma: float = 1.3,
              collapse_metric: str = "tree", prune_factor: float = 0.0, check: bool = True,
              workers: int | None = None, progress=None) -> list[CloudRow]:
    """Rows for ``count`` clouds per N in ``ns`` and every beta, in (N, index, beta) order."""
    jobs = [(n, i, seed, tuple(betas), gamma, collapse_metric, prune_factor, check) for n in ns for i in range(count)]
    workers = worker_count(workers)
    rows: list[CloudRow] = []
    if workers == 1:
        for k, job in enumerate(jobs):
            rows.extend(_job(job))
            if progress:
                progress(k + 1, len(jobs))
        return rows
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for k, part in enumerate(pool.map(_job, jobs)):
            rows.extend(part)
            if progress:
                progress(k + 1, len(jobs))
    return rows


def stability(rows: list[CloudRow]) -> dict[int, float]:
    """Per N: fraction of clouds whose signature is the same for every beta."""
    sigs: dict[tuple[int, int], set] = {}
    for r in rows:
        sigs.setdefault((r.n_arms, r.index), set()).add(r.signature)
    out: dict[int, list[bool]] = {}
    for (n, _), s in sigs.items():
        out.setdefault(n, []).append(len(s) == 1)
    return {n: float(np.mean(v)) for n, v in sorted(out.items())}


def aggregate(rows: list[CloudRow]) -> list[dict]:
    """One row per (N, beta) with the four sweep measures in percent / ms."""
    stab = stability(rows)
    groups: dict[tuple[int, float], list[CloudRow]] = {}
    for r in rows:
        groups.setdefault((r.n_arms, r.beta), []).append(r)
    out = []
    for (n, beta), rs in sorted(groups.items()):
        out.append(
            {
                "n_arms": n,
                "beta": beta,
                "clouds": len(rs),
                "endpoint_success_pct": 100.0 * float(np.mean([r.endpoint_success for r in rs])),
                "homeo_success_pct": 100.0 * float(np.mean([r.homeo_success for r in rs])),
                "mean_time_ms": float(np.mean([r.time_ms for r in rs])),
                "mean_max_distance": float(np.mean([r.max_distance for r in rs])),
                "beta_stability_pct": 100.0 * stab[n],
            }
        )
    return out
