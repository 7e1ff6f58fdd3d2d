"""Lloyd iterations (K-means local search) on a sample."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (Assignment, CentroidSet, PreconditionError, _cluster_sums,
                   as_dataset, default_threads, nearest, total)


@dataclass
class LloydConfig:
    max_iters: int = 300
    rel_tol: float = 1e-4
    parallel_rows: bool = False
    n_threads: int | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise PreconditionError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise PreconditionError("rel_tol must be > 0")

    @property
    def threads(self) -> int:
        if not self.parallel_rows:
            return 1
        return self.n_threads or default_threads()


@dataclass
class LloydOutcome:
    centroids: CentroidSet
    objective: float
    iterations: int
    converged_by: str  # "tolerance" | "max_iters" | "fixed_point"
    trace: list = field(default_factory=list, repr=False)
    labels: np.ndarray = field(default=None, repr=False)


def update_centroids(S, A: Assignment, k: int, previous: CentroidSet | None = None) -> CentroidSet:
    """Move every center to the mean of its members.

    A center with no members is flagged degenerate; it keeps the coordinates
    of ``previous`` when given, NaN otherwise.
    """
    S = as_dataset(S)
    sums, counts = _cluster_sums(S, np.asarray(A.labels, dtype=np.int64), k)
    empty = counts == 0
    centers = np.empty_like(sums)
    centers[~empty] = sums[~empty] / counts[~empty, None]
    if previous is not None:
        centers[empty] = previous.centers[empty]
    else:
        centers[empty] = np.nan
    return CentroidSet(centers, empty)


def kmeans(S, C_init: CentroidSet, cfg: LloydConfig | None = None, counter=None) -> LloydOutcome:
    """Run Lloyd iterations from ``C_init`` until a stopping rule fires.

    Stops at a centroid fixed point, when the relative objective improvement
    drops below ``rel_tol``, or after ``max_iters`` updates.  Empty clusters
    keep their last center while iterating and come back flagged degenerate.
    A step that would raise the objective (possible only through rounding) is
    rejected, so ``trace`` never increases.
    """
    cfg = cfg or LloydConfig()
    S = as_dataset(S)
    if C_init.degenerate.any():
        raise PreconditionError("kmeans needs a centroid set without degenerate centers")
    if C_init.n != S.shape[1]:
        raise PreconditionError(f"centroid dimension {C_init.n} != sample dimension {S.shape[1]}")
    threads = cfg.threads
    k = C_init.k

    centers = C_init.centers.copy()
    labels, mind = nearest(S, centers, threads, counter)
    f = total(mind)
    trace = [f]
    iterations = 0
    converged_by = "max_iters"
    while iterations < cfg.max_iters:
        sums, counts = _cluster_sums(S, labels, k)
        empty = counts == 0
        new = centers.copy()
        new[~empty] = sums[~empty] / counts[~empty, None]
        iterations += 1
        if np.array_equal(new, centers):
            converged_by = "fixed_point"
            break
        new_labels, new_mind = nearest(S, new, threads, counter)
        f_new = total(new_mind)
        if f_new > f:
            converged_by = "tolerance"
            break
        f_prev = f
        centers, labels, f = new, new_labels, f_new
        trace.append(f)
        if f_prev - f < cfg.rel_tol * f_prev:
            converged_by = "tolerance"
            break

    counts = np.bincount(labels, minlength=k)
    out = CentroidSet(centers, counts == 0)
    return LloydOutcome(out, f, iterations, converged_by, trace, labels)
