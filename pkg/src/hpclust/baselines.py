"""Reference algorithms: Forgy K-means and PBK-BDC."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import CentroidSet, ConfigError, DistanceCounter, as_dataset
from .engine import ClusteringResult, assign_active, local_search
from .lloyd import LloydConfig


@dataclass
class PbkConfig:
    segment_size: int
    inner_lloyd: LloydConfig = field(default_factory=LloydConfig)
    n_threads: int = 1


def forgy_init(X: np.ndarray, k: int, rng: np.random.Generator) -> CentroidSet:
    """``k`` rows of ``X`` picked uniformly without replacement.

    With fewer than ``k`` rows the surplus centers are degenerate.
    """
    m, n = X.shape
    C = CentroidSet.empty(k, n)
    take = min(k, m)
    C.centers[:take] = X[rng.choice(m, size=take, replace=False)]
    C.degenerate[:take] = False
    return C


def forgy_kmeans(X, k: int, cfg: LloydConfig | None = None, rng=None) -> ClusteringResult:
    X = as_dataset(X)
    if not 1 <= k <= X.shape[0]:
        raise ConfigError(f"k must be in [1, {X.shape[0]}], got {k}")
    cfg = cfg or LloydConfig()
    rng = rng if rng is not None else np.random.default_rng()
    counter = DistanceCounter()
    started = time.perf_counter()
    out = local_search(X, forgy_init(X, k, rng), cfg, counter)
    A, f = assign_active(X, out.centroids, cfg.threads, counter)
    elapsed = time.perf_counter() - started
    return ClusteringResult(
        centroids=out.centroids, full_objective=f, assignment=A, clustering_time=elapsed,
        per_worker=[], distance_evals=counter.count, wall_time=elapsed,
        extras={"iterations": out.iterations})


def segments(m: int, p: int, rng: np.random.Generator) -> list:
    """Row indices of ``ceil(m / p)`` contiguous segments of a seeded shuffle."""
    order = rng.permutation(m)
    return [order[lo:lo + p] for lo in range(0, m, p)]


def pbk_bdc(X, k: int, cfg: PbkConfig, rng=None) -> ClusteringResult:
    """Cluster every segment, pool the segment centers, cluster the pool.

    ``extras`` of the result records the segment count and repository size.
    """
    X = as_dataset(X)
    m = X.shape[0]
    p = cfg.segment_size
    if not 1 <= p <= m:
        raise ConfigError(f"segment size must be in [1, {m}], got {p}")
    if k > p:
        raise ConfigError(f"k = {k} exceeds the segment size {p}")
    rng = rng if rng is not None else np.random.default_rng()
    started = time.perf_counter()

    parts = segments(m, p, rng)
    inits = [forgy_init(X[idx], k, rng) for idx in parts]
    counters = [DistanceCounter() for _ in parts]

    def cluster_segment(i):
        return local_search(X[parts[i]], inits[i], cfg.inner_lloyd, counters[i])

    if cfg.n_threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(cfg.n_threads) as pool:
            found = list(pool.map(cluster_segment, range(len(parts))))
    else:
        found = [cluster_segment(i) for i in range(len(parts))]

    repository = np.concatenate([out.centroids.active()[0] for out in found])
    counter = DistanceCounter(sum(c.count for c in counters))
    final = local_search(repository, forgy_init(repository, k, rng), cfg.inner_lloyd, counter)
    A, f = assign_active(X, final.centroids, cfg.inner_lloyd.threads, counter)
    elapsed = time.perf_counter() - started
    result = ClusteringResult(
        centroids=final.centroids, full_objective=f, assignment=A, clustering_time=elapsed,
        per_worker=[], distance_evals=counter.count, wall_time=elapsed)
    result.extras.update(n_segments=len(parts), repository_size=len(repository),
                         iterations=final.iterations + sum(out.iterations for out in found))
    return result
