"""Command-line interface: ``hpclust {cluster,bench,gen,oracle}``.

Environment overrides: ``HPCLUST_SEED`` supplies ``--seed`` when the flag is
absent and ``HPCLUST_THREADS`` the default of ``--threads``.
"""
from __future__ import annotations

import argparse
import logging
import os
import secrets
import sys

import numpy as np

from .baselines import PbkConfig, forgy_kmeans, pbk_bdc
from .bench import (ALGORITHMS, BlobSpec, CampaignConfig, InstanceTooLargeError,
                    brute_force_mssc, default_sample_size, gen_blobs, run_campaign,
                    scaling_size)
from .core import ConfigError, NoSolutionError, PreconditionError, minmax_normalize
from .dataio import DataFormatError, load_dataset, save_dataset, save_labels, save_results
from .engine import EngineConfig, Strategy, run
from .lloyd import LloydConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TOO_LARGE = 4
EXIT_NO_SOLUTION = 5

log = logging.getLogger("hpclust")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _algorithms(text):
    if text == "all":
        return list(ALGORITHMS)
    names = [v.strip() for v in text.split(",") if v.strip()]
    bad = [n for n in names if n not in ALGORITHMS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS} or 'all'")
    return names


def resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("HPCLUST_SEED")
    if env:
        return int(env)
    seed = secrets.randbits(63)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _add_data_flags(p, required=True):
    p.add_argument("--input", required=required, help="delimited text dataset")
    p.add_argument("--delimiter", default=",", help="field delimiter (default ',')")
    p.add_argument("--header", action="store_true", help="skip the first line of --input")
    p.add_argument("--normalize", action="store_true", help="min-max scale every feature to [0, 1]")


def _add_search_flags(p):
    p.add_argument("--sample-size", type=_positive_int, default=None,
                   help="rows per sample (default min(5000, m - 1000), or m when m <= 2000)")
    p.add_argument("--workers", type=_positive_int, default=8, help="parallel workers (default 8)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="row threads for the inner strategy (default $HPCLUST_THREADS or CPU count)")
    p.add_argument("--time-limit", type=_nonneg_float, default=None,
                   help="time budget T in seconds (default 3.0 unless --max-samples is given)")
    p.add_argument("--max-samples", type=_positive_int, default=None,
                   help="per-worker sample budget (default unbounded)")
    p.add_argument("--t1", type=_nonneg_float, default=None,
                   help="hybrid competitive phase length (default half the budget)")
    p.add_argument("--t2", type=_nonneg_float, default=None,
                   help="hybrid cooperative phase length (default half the budget)")
    p.add_argument("--segment-size", type=_positive_int, default=None,
                   help="PBK-BDC segment size p (default: the sample size)")
    p.add_argument("--max-iters", type=_positive_int, default=300, help="Lloyd iteration cap (default 300)")
    p.add_argument("--tol", type=float, default=1e-4,
                   help="relative improvement threshold for Lloyd (default 1e-4)")
    p.add_argument("--clock", choices=("wall", "logical"), default="wall",
                   help="'logical' measures time in processed samples (needs --max-samples; default wall)")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default $HPCLUST_SEED, else random and printed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpclust", description="Sample-based parallel MSSC clustering.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("cluster", help="cluster one dataset")
    _add_data_flags(p)
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--strategy", required=True, choices=list(ALGORITHMS), help="algorithm to run")
    _add_search_flags(p)
    p.add_argument("--centroids-out", default="centroids.csv", help="centroid file (default centroids.csv)")
    p.add_argument("--assign-out", default=None, help="write one label per row here (default: not written)")

    p = sub.add_parser("bench", help="run a benchmark campaign and write result tables")
    _add_data_flags(p, required=False)
    p.add_argument("--blobs", type=_positive_int, default=None,
                   help="use a synthetic blob dataset with this many points (plus noise)")
    p.add_argument("--blobs-i", type=int, default=None, help="synthetic blobs with m = 3^(i+7)")
    p.add_argument("--k-list", type=_int_list, required=True, help="comma-separated cluster counts")
    p.add_argument("--algorithms", type=_algorithms, default=list(ALGORITHMS),
                   help="comma-separated subset of %s or 'all' (default all)" % ",".join(ALGORITHMS))
    p.add_argument("--n-exec", type=_positive_int, default=10, help="repetitions per series (default 10)")
    p.add_argument("--f-star", type=float, default=None,
                   help="reference objective for every k (default: best objective in the campaign)")
    p.add_argument("--out", required=True, help="per-run table; the summary goes to <out>_summary")
    _add_search_flags(p)

    p = sub.add_parser("gen", help="generate a synthetic Gaussian blob dataset")
    p.add_argument("--m", type=_positive_int, default=None, help="number of blob points")
    p.add_argument("--i", type=int, default=None, help="use m = 3^(i+7)")
    p.add_argument("--features", type=_positive_int, default=10, help="feature count (default 10)")
    p.add_argument("--blobs", type=_positive_int, default=10, help="blob count (default 10)")
    p.add_argument("--center-box", type=float, nargs=2, default=(-40.0, 40.0), metavar=("LO", "HI"),
                   help="center coordinate range (default -40 40)")
    p.add_argument("--std-min", type=_nonneg_float, default=0.0, help="smallest blob std (default 0)")
    p.add_argument("--std-max", type=_nonneg_float, default=10.0, help="largest blob std (default 10)")
    p.add_argument("--noise", type=int, default=500, help="uniform noise rows (default 500)")
    p.add_argument("--noise-box", type=float, nargs=2, default=(-50.0, 50.0), metavar=("LO", "HI"),
                   help="noise coordinate range (default -50 50)")
    p.add_argument("--seed", type=int, default=None,
                   help="generator seed (default $HPCLUST_SEED, else random and printed)")
    p.add_argument("--out", required=True, help="dataset file")
    p.add_argument("--centers-out", default=None, help="ground-truth centers file (default: not written)")

    p = sub.add_parser("oracle", help="exact MSSC optimum of a tiny dataset")
    _add_data_flags(p)
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    return parser


def _load(args):
    X = load_dataset(args.input, args.delimiter, args.header)
    return minmax_normalize(X) if args.normalize else X


def _budget(args):
    time_limit = args.time_limit
    if time_limit is None and args.max_samples is None:
        time_limit = 3.0
    return time_limit, args.max_samples


def _phase_split(args, budget):
    if args.t1 is None and args.t2 is None:
        return None
    t1 = args.t1 if args.t1 is not None else budget - args.t2
    t2 = args.t2 if args.t2 is not None else budget - t1
    return (t1, t2)


def cmd_cluster(args) -> int:
    if args.k < 1:
        raise ConfigError("--k must be >= 1")
    X = _load(args)
    seed = resolve_seed(args.seed)
    m = X.shape[0]
    s = args.sample_size or default_sample_size(m)
    lloyd = LloydConfig(args.max_iters, args.tol)
    time_limit, max_samples = _budget(args)
    if args.strategy == "forgy":
        res = forgy_kmeans(X, args.k, lloyd, np.random.default_rng(seed))
    elif args.strategy == "pbk":
        res = pbk_bdc(X, args.k, PbkConfig(args.segment_size or s, lloyd, args.threads or 1),
                      np.random.default_rng(seed))
    else:
        budget = time_limit if time_limit is not None else max_samples
        strategy = Strategy(args.strategy, _phase_split(args, budget) if args.strategy == "hybrid" else None)
        cfg = EngineConfig(k=args.k, sample_size=s, n_workers=args.workers, time_limit=time_limit,
                           max_samples=max_samples, strategy=strategy, master_seed=seed, lloyd=lloyd,
                           n_threads=args.threads, clock=args.clock)
        res = run(X, cfg)
    save_dataset(res.centroids.centers, args.centroids_out)
    if args.assign_out:
        save_labels(res.assignment.labels, args.assign_out)
    samples = ",".join(str(v) for v in res.samples) or "-"
    print(f"objective={res.full_objective!r} t={res.clustering_time:.6g} "
          f"n_d={res.distance_evals} samples={samples}")
    return EXIT_OK


def cmd_bench(args) -> int:
    seed = resolve_seed(args.seed)
    sources = [x for x in (args.input, args.blobs, args.blobs_i) if x is not None]
    if len(sources) != 1:
        raise ConfigError("give exactly one of --input, --blobs, --blobs-i")
    if args.input:
        X = _load(args)
        name = os.path.basename(args.input)
    else:
        m = args.blobs if args.blobs is not None else scaling_size(args.blobs_i)
        X, _, _ = gen_blobs(BlobSpec(m, seed=seed))
        if args.normalize:
            X = minmax_normalize(X)
        name = f"blobs{m}"
    time_limit, max_samples = _budget(args)
    budget = time_limit if time_limit is not None else max_samples
    f_star = {(name, k): args.f_star for k in args.k_list} if args.f_star is not None else {}
    cfg = CampaignConfig(ks=tuple(args.k_list), algorithms=tuple(args.algorithms), n_exec=args.n_exec,
                         seed=seed, sample_size=args.sample_size, n_workers=args.workers,
                         time_limit=time_limit, max_samples=max_samples,
                         phase_split=_phase_split(args, budget), segment_size=args.segment_size,
                         n_threads=args.threads, clock=args.clock,
                         lloyd=LloydConfig(args.max_iters, args.tol), f_star=f_star)
    series = run_campaign({name: X}, cfg,
                          progress=lambda r: log.info("%s k=%d rep=%d f=%r", r.algorithm, r.k,
                                                      r.repetition, r.objective))
    spath = save_results(series, args.out)
    for s in series:
        eps = s.summary["epsilon"]["median"]
        print(f"{s.records[0].algorithm} k={s.records[0].k} eps_med={eps:.4g} "
              f"t_med={s.summary['t']['median']:.4g} succ={int(s.succ)}")
    print(f"wrote {args.out} and {spath}")
    return EXIT_OK


def cmd_gen(args) -> int:
    if (args.m is None) == (args.i is None):
        raise ConfigError("give exactly one of --m and --i")
    m = args.m if args.m is not None else scaling_size(args.i)
    seed = resolve_seed(args.seed)
    spec = BlobSpec(m, args.features, args.blobs, tuple(args.center_box), (args.std_min, args.std_max),
                    args.noise, tuple(args.noise_box), seed)
    X, centers, _ = gen_blobs(spec)
    save_dataset(X, args.out)
    if args.centers_out:
        save_dataset(centers, args.centers_out)
    print(f"wrote {X.shape[0]} rows x {X.shape[1]} features to {args.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    X = _load(args)
    C, f = brute_force_mssc(X, args.k)
    print(repr(f))
    for row in C.centers[~C.degenerate]:
        print(",".join(repr(float(v)) for v in row))
    return EXIT_OK


COMMANDS = {"cluster": cmd_cluster, "bench": cmd_bench, "gen": cmd_gen, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except (ConfigError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InstanceTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except NoSolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION


if __name__ == "__main__":
    sys.exit(main())
