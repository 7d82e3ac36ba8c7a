"""``askel`` command line: skeletonize, generate, bench.

Exit codes: 0 success, 1 bad input (unreadable or malformed file, invalid
flags), 2 an internal invariant failed.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import __version__
from .bench import AGGREGATE_FIELDS, CLOUD_FIELDS, aggregate, cloud_seed, run_sweep
from .geometry import GeometryError
from .io import InputError, dumps, read_cloud, write_cloud, write_skeleton
from .mst import GraphError
from .straighten import DEFAULT_BETA, DEFAULT_GAMMA, build_ask
from .synth import generate_star, sample_cloud

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return x


def _n_range(text: str) -> list[int]:
    """``3..8`` or ``3,5,8`` or a single ``5``."""
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if not values or min(values) < 2:
        raise argparse.ArgumentTypeError(f"arm counts must be >= 2: {text!r}")
    return values


def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    if not values or min(values) <= 0:
        raise argparse.ArgumentTypeError(f"values must be positive: {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="askel", description="Approximate skeletons of point clouds.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sk = sub.add_parser("skeletonize", help="skeleton of one cloud file")
    sk.add_argument("input", help="cloud file (.json or .csv)")
    sk.add_argument("--beta", type=_positive, default=DEFAULT_BETA, help="branching factor (default 30)")
    sk.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help="epsilon = gamma * initial error, in [1, 10]")
    sk.add_argument("--kappa", type=_positive, default=math.inf,
                    help="split clusters at MST edges longer than kappa * l(C) (default: no split)")
    sk.add_argument("--collapse-metric", choices=("tree", "euclidean"), default="tree",
                    help="edge length used by the short-edge collapse")
    sk.add_argument("--prune-factor", type=float, default=0.0,
                    help="drop leaf branches shorter than this times epsilon (0 = off)")
    sk.add_argument("--format", choices=("auto", "json", "csv"), default="auto", help="input format")
    sk.add_argument("--output", help="skeleton JSON path (default: stdout)")

    gen = sub.add_parser("generate", help="noisy N-star clouds and their ground truth")
    gen.add_argument("--n", type=int, required=True, help="number of arms, 2..12")
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0, help="cloud i uses seed + i")
    gen.add_argument("--outdir", required=True)
    gen.add_argument("--format", choices=("json", "csv"), default="json")

    be = sub.add_parser("bench", help="success rates and timings over generated stars")
    be.add_argument("--n-range", type=_n_range, default=_n_range("3..8"), help="e.g. 3..8 or 3,5,8")
    be.add_argument("--count", type=int, default=100, help="clouds per N")
    be.add_argument("--betas", type=_float_list, default=[20.0, 30.0, 40.0])
    be.add_argument("--seed", type=int, default=0, help="cloud i of N uses seed + 1000 N + i")
    be.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    be.add_argument("--collapse-metric", choices=("tree", "euclidean"), default="tree")
    be.add_argument("--prune-factor", type=float, default=0.0)
    be.add_argument("--out", required=True, help="aggregate CSV, one row per (N, beta)")
    be.add_argument("--per-cloud", help="per-cloud CSV (default: <out stem>_clouds.csv)")
    be.add_argument("--workers", type=int, default=None, help="worker processes (default: $ASK_THREADS or 1)")
    be.add_argument("--no-check", action="store_true", help="skip the per-run guarantee checks")
    be.add_argument("--quiet", action="store_true")
    return p


def _cmd_skeletonize(args) -> int:
    cloud = read_cloud(args.input, args.format)
    try:
        skeleton, report = build_ask(cloud, beta=args.beta, gamma=args.gamma, kappa=args.kappa,
                                     collapse_metric=args.collapse_metric, prune_factor=args.prune_factor)
    except ValueError as exc:
        if isinstance(exc, GraphError):
            raise
        raise InputError(str(exc)) from None
    if args.output:
        write_skeleton(skeleton, args.output, report)
    else:
        from .io import skeleton_document

        sys.stdout.write(dumps(skeleton_document(skeleton, report), indent=1) + "\n")
    return EXIT_OK


def _cmd_generate(args) -> int:
    if not 2 <= args.n <= 12:
        raise InputError(f"--n must lie in 2..12, got {args.n}")
    if args.count < 1:
        raise InputError("--count must be positive")
    outdir = Path(args.outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {outdir}: {exc}") from None
    for i in range(args.count):
        seed = args.seed + i
        star, spec = generate_star(args.n, seed)
        cloud = sample_cloud(star, spec)
        stem = f"star{args.n}_seed{seed}"
        try:
            write_cloud(cloud, outdir / f"{stem}.{args.format}", args.format)
            truth = {"vertices": star.vertices, "edges": star.edges, "meta": spec.metadata()}
            (outdir / f"{stem}_truth.json").write_text(dumps(truth, indent=1) + "\n")
        except OSError as exc:
            raise InputError(f"cannot write to {outdir}: {exc}") from None
    return EXIT_OK


def _write_csv(path: Path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})


def _cmd_bench(args) -> int:
    if args.count < 1:
        raise InputError("--count must be positive")
    out = Path(args.out)
    per_cloud = Path(args.per_cloud) if args.per_cloud else out.with_name(out.stem + "_clouds.csv")

    def progress(done, total):
        if not args.quiet:
            print(f"\r{done}/{total} clouds", end="", file=sys.stderr, flush=True)

    try:
        rows = run_sweep(args.n_range, args.count, args.betas, seed=args.seed, gamma=args.gamma,
                         collapse_metric=args.collapse_metric, prune_factor=args.prune_factor,
                         check=not args.no_check, workers=args.workers, progress=progress)
    except ValueError as exc:
        if isinstance(exc, GraphError):
            raise
        raise InputError(str(exc)) from None
    if not args.quiet:
        print(file=sys.stderr)
    agg = aggregate(rows)
    try:
        _write_csv(out, AGGREGATE_FIELDS, agg)
        _write_csv(per_cloud, CLOUD_FIELDS, [r.__dict__ for r in rows])
    except OSError as exc:
        raise InputError(f"cannot write results: {exc}") from None
    if not args.quiet:
        for a in agg:
            print(f"N={a['n_arms']} beta={a['beta']:g}: endpoints {a['endpoint_success_pct']:.0f}% "
                  f"homeo {a['homeo_success_pct']:.0f}% time {a['mean_time_ms']:.0f} ms "
                  f"max dist {a['mean_max_distance']:.1f}")
    return EXIT_OK


_COMMANDS = {"skeletonize": _cmd_skeletonize, "generate": _cmd_generate, "bench": _cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except (InputError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GraphError, AssertionError, RuntimeError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
