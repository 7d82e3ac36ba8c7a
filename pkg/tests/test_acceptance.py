"""Acceptance criteria 1-9, each printed as one PASS/FAIL line.

The synthetic sweep (100 clouds per N in 3..8, beta in 20/30/40) runs once
per session.  Set ASK_THREADS to spread it over several processes.
"""

import math
import time

import numpy as np
import pytest

from askel.bench import aggregate, counter_budget, run_sweep, stability
from askel.depth import brute_force_depths, compute_depths
from askel.geometry import PointCloud, segment_cloud_distance
from askel.mst import EmbeddedGraph, build_mst, prim_mst_dense
from askel.straighten import SearchStats, approximate_run, build_ask, optimal_run_oracle
from askel.synth import generate_star, sample_cloud

from conftest import random_monotone_run

NS = range(3, 9)
BETAS = (20.0, 30.0, 40.0)
SWEEP_LIMIT_S = 600.0
RESULTS: list[str] = []


def report(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)


@pytest.fixture(scope="session")
def sweep():
    t0 = time.perf_counter()
    rows = run_sweep(NS, 100, BETAS, seed=0)
    return rows, aggregate(rows), time.perf_counter() - t0


def _cells(agg, key):
    return {(a["n_arms"], a["beta"]): a[key] for a in agg}


def test_criterion_1_endpoint_success(sweep):
    rows, agg, seconds = sweep
    cells = _cells(agg, "endpoint_success_pct")
    worst = min(cells, key=cells.get)
    ok = min(cells.values()) >= 98.0 and seconds < SWEEP_LIMIT_S
    table = " ".join(f"N{n}/b{b:g}={v:.0f}" for (n, b), v in sorted(cells.items()))
    report(1, ok, f"min {cells[worst]:.0f}% at N={worst[0]} beta={worst[1]:g} (need 98%), "
                  f"sweep {seconds:.0f} s (limit {SWEEP_LIMIT_S:.0f} s); {table}")
    assert ok


def test_criterion_2_homeomorphism_success(sweep):
    _, agg, _ = sweep
    cells = _cells(agg, "homeo_success_pct")
    worst = min(cells, key=cells.get)
    ok = min(cells.values()) >= 96.0
    table = " ".join(f"N{n}/b{b:g}={v:.0f}" for (n, b), v in sorted(cells.items()))
    report(2, ok, f"min {cells[worst]:.0f}% at N={worst[0]} beta={worst[1]:g} (need 96%); {table}")
    assert ok


def test_criterion_3_size_guarantee():
    rng = np.random.default_rng(2024)
    violations = 0
    runs = 500
    for _ in range(runs):
        n = int(rng.integers(2, 201))
        run = random_monotone_run(rng, n, dim=int(rng.integers(2, 4)), noise=float(rng.uniform(0.2, 4.0)))
        eps = float(rng.uniform(0.05, 5.0))
        violations += len(approximate_run(run, 2 * eps)) > optimal_run_oracle(run, eps)
    ok = violations == 0
    report(3, ok, f"{violations} violations over {runs} random runs (n <= 200)")
    assert ok


def test_criterion_4_offset_guarantee(sweep):
    rows, _, _ = sweep
    bad = sum(r.offset_violation for r in rows)
    worst = max(max(r.pre_vertex_offset, r.pre_cloud_offset) / r.epsilon for r in rows if r.epsilon > 0)
    ok = bad == 0
    report(4, ok, f"{bad} pre-collapse offset violations over {len(rows)} skeletons, "
                  f"worst offset {worst:.2f} eps (bound 2 eps)")
    assert ok


def test_criterion_5_search_conditions(sweep):
    rows, _, _ = sweep
    cond = sum(r.search_violations for r in rows)
    over = sum(r.counter_violations for r in rows)
    worst = max(r.max_counter_ratio for r in rows)
    # the counter normalised by n log n stays flat as n grows 64-fold
    rng = np.random.default_rng(5)
    ratios = []
    for n in (256, 1024, 4096, 16384):
        run = random_monotone_run(rng, n)
        stats = SearchStats()
        approximate_run(run, 1.5, stats)
        ratios.append(stats.slab_evals / counter_budget(n))
    flat = max(ratios) <= 1.0 and ratios[-1] <= 2 * ratios[0] + 0.05
    ok = cond == 0 and over == 0 and flat
    report(5, ok, f"{cond} (a)/(b) violations, {over} runs over the 8 n log2 n + 8 budget "
                  f"(worst {worst:.3f} of budget); random-run budget shares "
                  + ", ".join(f"{r:.3f}" for r in ratios))
    assert ok


def test_criterion_6_sub_chord_factor_two():
    rng = np.random.default_rng(6)
    violations = 0
    for _ in range(1000):
        n = int(rng.integers(2, 13))
        run = random_monotone_run(rng, n, dim=int(rng.integers(2, 4)), noise=float(rng.uniform(0.1, 5.0)))
        D = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = segment_cloud_distance((i, j), run)
        for i in range(n):
            for j in range(i + 1, n):
                violations += D[i : j + 1, i : j + 1].max() > 2 * D[i, j] + 1e-9
    ok = violations == 0
    report(6, ok, f"{violations} violations over 1000 runs (n <= 12), tolerance 1e-9")
    assert ok


def test_criterion_7_oracles():
    rng = np.random.default_rng(7)
    worst_mst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 301))
        cloud = PointCloud.from_points(rng.normal(scale=10.0, size=(n, int(rng.integers(2, 4)))))
        fast = build_mst(cloud).tree.total_length()
        e = prim_mst_dense(cloud.points)
        slow = float(np.linalg.norm(cloud.points[e[:, 0]] - cloud.points[e[:, 1]], axis=1).sum())
        worst_mst = max(worst_mst, abs(fast - slow))
    worst_depth = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 201))
        edges = np.array([(int(rng.integers(0, v)), v) for v in range(1, n)], dtype=np.int64).reshape(-1, 2)
        tree = EmbeddedGraph(rng.normal(scale=10.0, size=(n, 3)), edges)
        worst_depth = max(worst_depth, float(np.abs(compute_depths(tree).depth - brute_force_depths(tree)).max()))
    ok = worst_mst <= 1e-9 and worst_depth <= 1e-9
    report(7, ok, f"max MST length gap {worst_mst:.1e} over 200 clouds, max depth gap {worst_depth:.1e} over 200 trees")
    assert ok


def test_criterion_8_performance(sweep):
    rows, _, _ = sweep
    sizes = np.array(sorted({r.n_points for r in rows}), dtype=float)
    times = np.array([np.median([r.time_ms for r in rows if r.n_points == s]) for s in sizes])
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    star, spec = generate_star(3, 11, points_per_arm=100)
    small = sample_cloud(star, spec)
    build_ask(small)
    t0 = time.perf_counter()
    build_ask(small)
    small_s = time.perf_counter() - t0
    ok = slope < 1.3 and small_s < 1.0
    report(8, ok, f"log-log exponent {slope:.2f} (need < 1.3) from median times "
                  + ", ".join(f"{int(s)}:{t:.0f}ms" for s, t in zip(sizes, times))
                  + f"; 300-point cloud {small_s * 1e3:.0f} ms (need < 1 s)")
    assert ok


def test_criterion_9_beta_stability(sweep):
    rows, _, _ = sweep
    stab = stability(rows)
    worst = min(stab, key=stab.get)
    ok = min(stab.values()) >= 0.95
    report(9, ok, f"min {100 * stab[worst]:.0f}% at N={worst} (need 95%); "
                  + " ".join(f"N{n}={100 * v:.0f}" for n, v in stab.items()))
    assert ok
