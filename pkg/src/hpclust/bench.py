"""Benchmark metrics, synthetic data, the exact MSSC oracle and campaign runs."""
from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .baselines import PbkConfig, forgy_kmeans, pbk_bdc
from .core import (Assignment, CentroidSet, ConfigError, PreconditionError, as_dataset,
                   mssc_objective)
from .engine import EngineConfig, Strategy, run
from .lloyd import LloydConfig, update_centroids

log = logging.getLogger(__name__)

HPCLUST = ("inner", "competitive", "cooperative", "hybrid")
ALGORITHMS = HPCLUST + ("forgy", "pbk")


class InstanceTooLargeError(ValueError):
    """Exhaustive enumeration refused: too many partitions."""


# --------------------------------------------------------------------------
# metrics

def relative_error(f: float, f_star: float) -> float:
    """Percent deviation of ``f`` from the reference ``f_star``; may be negative."""
    if not f_star > 0:
        raise ValueError(f"reference objective must be positive, got {f_star}")
    return 100.0 * (f - f_star) / f_star


def baseline_objective(series_per_algorithm: dict) -> float:
    """Largest per-algorithm median of the best sample objectives."""
    if not series_per_algorithm:
        raise ValueError("no algorithms given")
    medians = []
    for name, values in series_per_algorithm.items():
        values = list(values)
        if not values:
            raise ValueError(f"no values for algorithm {name!r}")
        medians.append(statistics.median(values))
    return max(medians)


def baseline_convergence_time(traces, f_bar: float) -> float | None:
    """Earliest time any worker's accepted sample objective is <= ``f_bar``.

    ``traces`` is one update trace (a list of ``(time, objective)``) or a list
    of them, one per worker.
    """
    traces = list(traces)
    if traces and isinstance(traces[0], tuple):
        traces = [traces]
    best = None
    for trace in traces:
        for t, f in trace:
            if f <= f_bar:
                if best is None or t < best:
                    best = t
                break
    return best


def _stats(values):
    values = [v for v in values if v is not None]
    if not values:
        return {"median": None, "min": None, "max": None, "std": None}
    return {
        "median": statistics.median(values),
        "min": min(values),
        "max": max(values),
        "std": statistics.stdev(values) if len(values) > 1 else None,
    }


@dataclass
class MetricRecord:
    dataset: str
    algorithm: str
    k: int
    repetition: int
    objective: float
    epsilon: float | None = None
    t: float = 0.0
    t_bar: float | None = None
    n_d: int = 0
    sample_objective: float | None = None
    f_star: float | None = None
    s: int | None = None
    n_s: int | None = None
    T: float | None = None
    T1: float | None = None
    T2: float | None = None


SUMMARY_METRICS = ("epsilon", "t_bar", "t", "objective", "n_d", "n_s")


@dataclass
class RunSeries:
    records: list
    summary: dict = field(default_factory=dict)
    succ: bool = False
    f_bar: float | None = None

    @property
    def key(self):
        r = self.records[0]
        return r.dataset, r.k, r.algorithm


def summarize(records) -> RunSeries:
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty series")
    keys = {(r.dataset, r.k, r.algorithm) for r in records}
    if len(keys) != 1:
        raise ValueError(f"records mix several (dataset, k, algorithm) triples: {sorted(keys)}")
    summary = {name: _stats(getattr(r, name) for r in records) for name in SUMMARY_METRICS}
    return RunSeries(records, summary)


def mark_success(series: list) -> None:
    """Set ``succ`` on every series of one (dataset, k) group.

    A series succeeds when its median objective is below the mean objective of
    every other algorithm's series.
    """
    for s in series:
        med = statistics.median(r.objective for r in s.records)
        s.succ = all(med < statistics.fmean(r.objective for r in o.records)
                     for o in series if o is not s)


# --------------------------------------------------------------------------
# synthetic data

@dataclass
class BlobSpec:
    num_points: int
    features: int = 10
    num_blobs: int = 10
    center_box: tuple = (-40.0, 40.0)
    std_range: tuple = (0.0, 10.0)
    noise_points: int = 500
    noise_box: tuple = (-50.0, 50.0)
    seed: int | None = 0

    def __post_init__(self):
        for name in ("center_box", "std_range", "noise_box"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} must satisfy low <= high, got {(lo, hi)}")
        if self.num_points < 1 or self.features < 1 or self.num_blobs < 1:
            raise ConfigError("num_points, features and num_blobs must be positive")
        if self.noise_points < 0:
            raise ConfigError("noise_points must be >= 0")


def scaling_size(i: int) -> int:
    """Point count of the i-th scaling-experiment dataset, 3^(i+7)."""
    return 3 ** (i + 7)


def gen_blobs(spec: BlobSpec):
    """Isotropic Gaussian blobs plus uniform noise rows.

    Returns ``(X, centers, stds)``; rows are blob by blob, noise last.
    """
    rng = np.random.default_rng(spec.seed)
    n, b = spec.features, spec.num_blobs
    centers = rng.uniform(*spec.center_box, size=(b, n))
    stds = rng.uniform(*spec.std_range, size=b)
    sizes = np.full(b, spec.num_points // b)
    sizes[: spec.num_points % b] += 1
    parts = [centers[j] + stds[j] * rng.standard_normal((sizes[j], n)) for j in range(b)]
    parts.append(rng.uniform(*spec.noise_box, size=(spec.noise_points, n)))
    return np.concatenate(parts), centers, stds


# --------------------------------------------------------------------------
# exact oracle

MAX_PARTITIONS = 10**7


def _stirling2(m: int, j: int) -> int:
    return sum((-1) ** i * math.comb(j, i) * (j - i) ** m for i in range(j + 1)) // math.factorial(j)


def partition_count(m: int, k: int) -> int:
    """Number of partitions of ``m`` items into at most ``k`` nonempty groups."""
    return sum(_stirling2(m, j) for j in range(1, min(k, m) + 1))


def _growth_strings(m: int, k: int) -> np.ndarray:
    """All restricted growth strings of length ``m`` with values below ``k``."""
    rows = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)
    for _ in range(1, m):
        new_rows, new_top = [], []
        for v in range(k):
            ok = v <= top + 1
            if ok.any():
                r = rows[ok]
                new_rows.append(np.hstack([r, np.full((len(r), 1), v, dtype=np.int8)]))
                new_top.append(np.maximum(top[ok], v))
        rows = np.concatenate(new_rows)
        top = np.concatenate(new_top)
    return rows


def brute_force_mssc(X, k: int):
    """Global minimum of the MSSC objective by enumerating every partition.

    Returns ``(CentroidSet, objective)``.  Groups are labelled in order of first
    appearance; unused centers (only when ``k`` exceeds the distinct rows) are
    degenerate.
    """
    X = as_dataset(X)
    m = X.shape[0]
    if not 1 <= k <= m:
        raise PreconditionError(f"k must be in [1, {m}], got {k}")
    count = partition_count(m, k)
    if not ((m <= 14 and k <= 3) or count <= MAX_PARTITIONS):
        raise InstanceTooLargeError(
            f"{count} partitions of {m} points into <= {k} groups exceed the enumeration limit")

    labels = _growth_strings(m, k)
    sq = float((X * X).sum())
    best_cost, best = np.inf, None
    for lo in range(0, len(labels), 20000):
        chunk = labels[lo:lo + 20000].astype(np.int64)
        onehot = (chunk[:, :, None] == np.arange(k)).astype(np.float64)
        sums = np.einsum("rmk,mn->rkn", onehot, X)
        counts = onehot.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            between = np.where(counts > 0, (sums * sums).sum(axis=2) / counts, 0.0)
        cost = sq - between.sum(axis=1)
        i = int(np.argmin(cost))
        if cost[i] < best_cost:
            best_cost, best = cost[i], chunk[i]

    A = Assignment(best, np.bincount(best, minlength=k))
    C = update_centroids(X, A, k)
    valid, _ = C.active()
    return C, mssc_objective(CentroidSet(valid), X)


# --------------------------------------------------------------------------
# campaigns

@dataclass
class CampaignConfig:
    ks: tuple = (10,)
    algorithms: tuple = ALGORITHMS
    n_exec: int = 10
    seed: int = 0
    sample_size: int | None = None
    n_workers: int = 8
    time_limit: float | None = 3.0
    max_samples: int | None = None
    phase_split: tuple | None = None
    segment_size: int | None = None
    n_threads: int | None = None
    clock: str = "wall"
    lloyd: LloydConfig = field(default_factory=LloydConfig)
    f_star: dict = field(default_factory=dict)  # (dataset, k) -> reference objective

    def __post_init__(self):
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ConfigError(f"unknown algorithms {sorted(unknown)}; expected {ALGORITHMS}")
        if self.n_exec < 1:
            raise ConfigError("n_exec must be >= 1")
        if any(k < 1 for k in self.ks):
            raise ConfigError("every k must be >= 1")


def default_sample_size(m: int) -> int:
    """min(5000, m - 1000), falling back to the whole dataset for small m."""
    return min(5000, m - 1000) if m > 2000 else m


def run_seed(seed: int, *key) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def run_once(X, algorithm: str, k: int, cfg: CampaignConfig, seed: int):
    """Run one algorithm once; returns ``(ClusteringResult, MetricRecord)`` (dataset unset)."""
    m = X.shape[0]
    s = cfg.sample_size or default_sample_size(m)
    rec = MetricRecord("", algorithm, k, 0, objective=math.nan)
    if algorithm in HPCLUST:
        split = cfg.phase_split if algorithm == "hybrid" else None
        ecfg = EngineConfig(k=k, sample_size=s, n_workers=cfg.n_workers, time_limit=cfg.time_limit,
                            max_samples=cfg.max_samples, strategy=Strategy(algorithm, split),
                            master_seed=seed, lloyd=cfg.lloyd, n_threads=cfg.n_threads,
                            clock=cfg.clock)
        res = run(X, ecfg)
        rec.sample_objective = res.best_sample_objective
        rec.t = res.clustering_time
        rec.s = s
        rec.n_s = sum(res.samples)
        rec.T = ecfg.budget
        if algorithm == "hybrid":
            rec.T1, rec.T2 = ecfg.phases()
    else:
        rng = np.random.default_rng(seed)
        if algorithm == "forgy":
            res = forgy_kmeans(X, k, cfg.lloyd, rng)
        else:
            p = cfg.segment_size or s
            res = pbk_bdc(X, k, PbkConfig(p, cfg.lloyd, cfg.n_threads or 1), rng)
            rec.s = p
        rec.t = float(res.extras["iterations"]) if cfg.clock == "logical" else res.clustering_time
    rec.objective = res.full_objective
    rec.n_d = res.distance_evals
    return res, rec


def run_campaign(datasets: dict, cfg: CampaignConfig, progress=None) -> list:
    """Every (dataset, k, algorithm, repetition) combination, with metrics filled in."""
    out = []
    for di, (name, X) in enumerate(datasets.items()):
        X = as_dataset(X)
        for k in cfg.ks:
            group = {}
            traces = {}
            for algorithm in cfg.algorithms:
                ai = ALGORITHMS.index(algorithm)
                recs = []
                for rep in range(cfg.n_exec):
                    res, rec = run_once(X, algorithm, k, cfg, run_seed(cfg.seed, di, k, ai, rep))
                    rec.dataset, rec.repetition = name, rep
                    recs.append(rec)
                    traces[algorithm, rep] = [w.trace for w in res.per_worker]
                    if progress:
                        progress(rec)
                group[algorithm] = recs
            out.extend(_finish_group(group, traces, cfg.f_star.get((name, k))))
    return out


def _finish_group(group: dict, traces: dict, f_star: float | None) -> list:
    records = [r for recs in group.values() for r in recs]
    if f_star is None:
        f_star = min(r.objective for r in records)
    sampled = {a: [r.sample_objective for r in recs] for a, recs in group.items() if a in HPCLUST}
    f_bar = baseline_objective(sampled) if sampled else None
    for r in records:
        r.f_star = f_star
        r.epsilon = relative_error(r.objective, f_star) if f_star > 0 else None
        if f_bar is not None and r.algorithm in HPCLUST:
            r.t_bar = baseline_convergence_time(traces[r.algorithm, r.repetition], f_bar)
    series = [summarize(recs) for recs in group.values()]
    for s in series:
        s.f_bar = f_bar
    mark_success(series)
    return series
