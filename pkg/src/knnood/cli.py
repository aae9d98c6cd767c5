"""Command-line entry point: ``knnood {score,eval,hist,synth}``.

Exit codes: 0 success, 2 usage or input error, 3 degenerate data.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, KnnOodError
from .metrics import LabeledScores, metrics_csv, pr_at_threshold, radius_histogram, roc_auc
from .scoring import DEFAULT_K, score_stack
from .tensor_io import load_layer_stack, load_matrix
from .theory import (
    ContractionConfig,
    SyntheticDensity,
    TheoremOneConfig,
    ball_mass_check,
    run_contraction_trial,
    run_ranking_trial,
    run_theorem1_trial,
)

DEFAULT_SEED = 20210101
EXIT_INPUT = 2
EXIT_DEGENERATE = 3


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _banner(args) -> None:
    items = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    sys.stderr.write("# knnood " + " ".join(f"{k}={v}" for k, v in items.items()) + "\n")


def load_scores(path) -> np.ndarray:
    """Score vector from a one-column CSV, or the aggregate block of a scorecard."""
    text = Path(path).read_text()
    if "t_aggregate" in text:
        block = text.split("query_id,t_aggregate", 1)[1].splitlines()[1:]
        return np.array([float(line.split(",")[1]) for line in block if line.strip()])
    m = load_matrix(path)
    if m.d != 1:
        raise KnnOodError(f"{path}: expected one score per row, got {m.d} columns")
    return m.values[:, 0]


def cmd_score(args) -> int:
    if len(args.train) != len(args.query):
        raise KnnOodError(
            f"{len(args.train)} training layer files but {len(args.query)} query layer files"
        )
    train = load_layer_stack(args.train)
    queries = load_layer_stack(args.query)
    card = score_stack(
        train, queries, k=args.k, threshold=args.threshold, strategy=args.strategy, workers=args.threads
    )
    _emit(card.to_csv(), args.out)
    return 0


def cmd_eval(args) -> int:
    ls = LabeledScores(load_scores(args.in_scores), load_scores(args.out_scores))
    rows = [("auc", roc_auc(ls))]
    for t in args.threshold or []:
        recall, err = pr_at_threshold(ls, t)
        rows += [(f"recall@{t!r}", recall), (f"precision_error@{t!r}", err)]
    _emit(metrics_csv(rows), args.out)
    return 0


def cmd_hist(args) -> int:
    rng = None if args.range is None else tuple(args.range)
    spec = radius_histogram(load_scores(args.in_scores), load_scores(args.out_scores), args.bins, rng)
    _emit(spec.to_csv(), args.out)
    return 0


# per-check defaults for flags left unset: (density, n, k, trials)
SYNTH_DEFAULTS = {
    "t1": ("triangular-1d", 50_000, 1000, 200),
    "ranking": ("triangular-1d", 10_000, None, 1),
    "contraction": ("uniform-ball", 20_000, DEFAULT_K, 1),
    "ballmass": ("uniform-box", 100_000, 200, 1),
}


def _resolve_synth(args) -> None:
    density, n, k, trials = SYNTH_DEFAULTS[args.theorem]
    args.density = args.density or density
    args.n = args.n or n
    if args.k is None:
        args.k = k if k is not None else math.ceil(args.n**0.7)
    args.trials = args.trials or trials


def cmd_synth(args) -> int:
    sd = SyntheticDensity.from_name(args.density, args.dim)
    if args.theorem == "t1":
        cfg = TheoremOneConfig(
            sd, n=args.n, k=args.k, delta=args.delta, trials=args.trials, seed=args.seed, margin=args.margin
        )
        report = run_theorem1_trial(cfg, threads=args.threads)
    elif args.theorem == "ranking":
        report = run_ranking_trial(
            sd, n=args.n, k=args.k, gap=args.gap, pairs=args.pairs, seed=args.seed,
            delta=args.delta, threads=args.threads,
        )
    elif args.theorem == "contraction":
        cfg = ContractionConfig(
            sd,
            gamma_in=args.gamma_in,
            gamma_out=args.gamma_out,
            r_min=args.r_min,
            n=args.n,
            k=args.k,
            pairs=args.pairs,
            trials=args.trials,
            seed=args.seed,
            delta=args.delta,
        )
        report = run_contraction_trial(cfg, threads=args.threads)
    else:
        report = ball_mass_check(
            sd, n=args.n, k=args.k, delta=args.delta, trials=args.trials,
            seed=args.seed, balls=args.balls, threads=args.threads,
        )
    _emit(report.to_csv(), args.out)
    sys.stderr.write(report.summary() + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knnood", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument(
        "--threads", type=int, default=os.cpu_count() or 1,
        help="worker threads for batch queries and trials (default: %(default)s)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("score", parents=[common], formatter_class=fmt,
                       help="score query embeddings against training embeddings")
    p.add_argument("--train", nargs="+", required=True, help="training layer files (.csv/.emb), in layer order")
    p.add_argument("--query", nargs="+", required=True, help="query layer files, same order")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="neighbor count")
    p.add_argument("--threshold", type=float, help="flag queries with aggregate score above this")
    p.add_argument("--strategy", choices=("auto", "brute", "kdtree"), default="auto")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", parents=[common], formatter_class=fmt, help="ROC-AUC of OOD scores")
    p.add_argument("in_scores")
    p.add_argument("out_scores")
    p.add_argument("--threshold", type=float, action="append", help="also report recall/precision-error at t")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("hist", parents=[common], formatter_class=fmt, help="per-class radius histogram")
    p.add_argument("in_scores")
    p.add_argument("out_scores")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"))
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("synth", parents=[common], formatter_class=fmt,
                       help="Monte-Carlo check of a finite-sample guarantee")
    p.add_argument("theorem", choices=("t1", "ranking", "contraction", "ballmass"))
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--density", choices=("triangular-1d", "uniform-ball", "uniform-box", "taper-box"),
                   help="density family (default depends on the check)")
    p.add_argument("--dim", type=int, default=2, help="dimension for ball/box families")
    p.add_argument("--n", type=int, help="training sample size (default depends on the check)")
    p.add_argument("--k", type=int,
                   help="neighbor count (defaults: t1 1000, ranking ceil(n^0.7), contraction 1, ballmass 200)")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--trials", type=int, help="independent trials")
    p.add_argument("--margin", type=float, default=0.05, help="t1: outlier distance from the support")
    p.add_argument("--gap", type=float, default=0.5, help="ranking: density gap between paired probes")
    p.add_argument("--pairs", type=int, default=500, help="ranking/contraction: probe pairs")
    p.add_argument("--gamma-in", type=float, default=0.5)
    p.add_argument("--gamma-out", type=float, default=0.8)
    p.add_argument("--r-min", type=float, default=0.5)
    p.add_argument("--balls", type=int, default=1000, help="ballmass: random balls per trial")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth":
        _resolve_synth(args)
    _banner(args)
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        sys.stderr.write(f"knnood: degenerate data: {exc}\n")
        return EXIT_DEGENERATE
    except (KnnOodError, OSError) as exc:
        sys.stderr.write(f"knnood: error: {exc}\n")
        return EXIT_INPUT
