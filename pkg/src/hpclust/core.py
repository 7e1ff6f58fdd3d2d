"""Dense datasets, squared Euclidean distances and the MSSC objective.

Everything here is a pure function over numpy arrays.  The hot loops are
numba kernels compiled with ``nogil=True`` so several worker threads can run
them at once, and the row-partitioned variants use a small thread pool.
"""
from __future__ import annotations

import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np


class ConfigError(ValueError):
    """Invalid run configuration."""


class PreconditionError(ValueError):
    """An operation was called on inputs that violate its contract."""


class NoSolutionError(RuntimeError):
    """No worker produced a finite incumbent."""


class DistanceCounter:
    """Tally of point-to-center distance evaluations (``n_d``).

    One counter per worker, so no locking is needed; the engine sums them.
    """

    __slots__ = ("count",)

    def __init__(self, count: int = 0):
        self.count = count

    def add(self, n: int) -> None:
        self.count += int(n)

    def __repr__(self):
        return f"DistanceCounter({self.count})"


def _tally(counter, n):
    if counter is not None:
        counter.add(n)


def as_dataset(X) -> np.ndarray:
    """Validate and return ``X`` as a C-contiguous float64 ``(m, n)`` array."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise PreconditionError(f"dataset must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise PreconditionError(f"dataset must have m >= 1 and n >= 1, got {X.shape}")
    if not np.isfinite(X).all():
        raise PreconditionError("dataset contains NaN or Inf entries")
    return X


@dataclass
class CentroidSet:
    """``k`` centers plus a per-center degenerate flag.

    A degenerate center carries no usable coordinates (they are kept only as
    a placeholder) and has to be reseeded before it can take part in an
    assignment.
    """

    centers: np.ndarray
    degenerate: np.ndarray = None

    def __post_init__(self):
        self.centers = np.array(self.centers, dtype=np.float64, copy=True, ndmin=2)
        if self.degenerate is None:
            self.degenerate = np.zeros(len(self.centers), dtype=bool)
        else:
            self.degenerate = np.array(self.degenerate, dtype=bool, copy=True)
        if self.centers.ndim != 2 or len(self.degenerate) != len(self.centers):
            raise PreconditionError("centers must be (k, n) with k degenerate flags")
        if len(self.centers) < 1:
            raise PreconditionError("need at least one center")
        if not np.isfinite(self.centers[~self.degenerate]).all():
            raise PreconditionError("non-degenerate centers must be finite")

    @classmethod
    def empty(cls, k: int, n: int) -> "CentroidSet":
        """All-degenerate set, the starting state of every worker."""
        return cls(np.full((k, n), np.nan), np.ones(k, dtype=bool))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def n(self) -> int:
        return self.centers.shape[1]

    @property
    def n_degenerate(self) -> int:
        return int(self.degenerate.sum())

    def copy(self) -> "CentroidSet":
        return CentroidSet(self.centers, self.degenerate)

    def active(self):
        """Return ``(centers, index)`` of the non-degenerate centers."""
        idx = np.flatnonzero(~self.degenerate)
        return np.ascontiguousarray(self.centers[idx]), idx

    def same_as(self, other: "CentroidSet") -> bool:
        """Bitwise equality of valid coordinates and flags."""
        if self.centers.shape != other.centers.shape:
            return False
        if not np.array_equal(self.degenerate, other.degenerate):
            return False
        ok = ~self.degenerate
        return self.centers[ok].tobytes() == other.centers[ok].tobytes()


@dataclass
class Assignment:
    labels: np.ndarray
    counts: np.ndarray
    distances: np.ndarray = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return len(self.counts)


# --------------------------------------------------------------------------
# kernels

@nb.njit(nogil=True, cache=True)
def _sqdist(a, b):
    d = 0.0
    for t in range(a.shape[0]):
        diff = a[t] - b[t]
        d += diff * diff
    return d


@nb.njit(nogil=True, cache=True)
def _nearest_rows(X, C, labels, mind, lo, hi):
    k = C.shape[0]
    n = X.shape[1]
    for i in range(lo, hi):
        best = np.inf
        bj = 0
        for j in range(k):
            d = 0.0
            for t in range(n):
                diff = X[i, t] - C[j, t]
                d += diff * diff
            if d < best:
                best = d
                bj = j
        labels[i] = bj
        mind[i] = best


@nb.njit(nogil=True, cache=True)
def _point_rows(X, p, out, lo, hi):
    n = X.shape[1]
    for i in range(lo, hi):
        d = 0.0
        for t in range(n):
            diff = X[i, t] - p[t]
            d += diff * diff
        out[i] = d


@nb.njit(nogil=True, cache=True)
def _seq_sum(a):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i]
    return s


@nb.njit(nogil=True, cache=True)
def _cluster_sums(X, labels, k):
    m, n = X.shape
    sums = np.zeros((k, n))
    counts = np.zeros(k, dtype=np.int64)
    for i in range(m):
        j = labels[i]
        counts[j] += 1
        for t in range(n):
            sums[j, t] += X[i, t]
    return sums, counts


# --------------------------------------------------------------------------
# row-parallel execution

_pool_lock = threading.Lock()
_pools: dict[int, ThreadPoolExecutor] = {}


def default_threads() -> int:
    env = os.environ.get("HPCLUST_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _row_pool(n_threads: int) -> ThreadPoolExecutor:
    with _pool_lock:
        pool = _pools.get(n_threads)
        if pool is None:
            pool = ThreadPoolExecutor(n_threads, thread_name_prefix="hpclust-rows")
            _pools[n_threads] = pool
        return pool


def _partitions(m: int, parts: int):
    parts = max(1, min(parts, m))
    step = math.ceil(m / parts)
    return [(lo, min(lo + step, m)) for lo in range(0, m, step)]


def _run_rows(kernel, m, n_threads, *args):
    """Apply ``kernel(*args, lo, hi)`` over row ranges, fork-join style."""
    if n_threads is None or n_threads <= 1 or m < 2 * n_threads:
        kernel(*args, 0, m)
        return
    pool = _row_pool(n_threads)
    futures = [pool.submit(kernel, *args, lo, hi) for lo, hi in _partitions(m, n_threads)]
    for f in futures:
        f.result()


def nearest(X: np.ndarray, centers: np.ndarray, n_threads: int = 1, counter=None):
    """Labels and squared distances of every row to its nearest center.

    Ties go to the lowest center index.  Per-row results do not depend on
    the partitioning, so parallel and sequential runs agree bitwise.
    """
    m = X.shape[0]
    labels = np.empty(m, dtype=np.int64)
    mind = np.empty(m, dtype=np.float64)
    _run_rows(_nearest_rows, m, n_threads, X, centers, labels, mind)
    _tally(counter, m * centers.shape[0])
    return labels, mind


def point_distances(X: np.ndarray, p: np.ndarray, n_threads: int = 1, counter=None) -> np.ndarray:
    """Squared distance from every row of ``X`` to the point ``p``."""
    m = X.shape[0]
    out = np.empty(m, dtype=np.float64)
    _run_rows(_point_rows, m, n_threads, X, np.ascontiguousarray(p, dtype=np.float64), out)
    _tally(counter, m)
    return out


def total(values: np.ndarray) -> float:
    """Fixed-order (left to right) sum, independent of any row partitioning."""
    return float(_seq_sum(np.ascontiguousarray(values, dtype=np.float64)))


# --------------------------------------------------------------------------
# public operations

def squared_distance(a, b, counter=None) -> float:
    a = np.ascontiguousarray(a, dtype=np.float64).ravel()
    b = np.ascontiguousarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise PreconditionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    _tally(counter, 1)
    return float(_sqdist(a, b))


def _check_pair(X, C: CentroidSet):
    if C.degenerate.any():
        raise PreconditionError(
            f"{C.n_degenerate} degenerate centroid(s) must be reseeded before assignment")
    if C.n != X.shape[1]:
        raise PreconditionError(f"centroid dimension {C.n} != dataset dimension {X.shape[1]}")


def assign_nearest(X, C: CentroidSet, n_threads: int = 1, counter=None) -> Assignment:
    X = as_dataset(X)
    _check_pair(X, C)
    labels, mind = nearest(X, C.centers, n_threads, counter)
    counts = np.bincount(labels, minlength=C.k)
    return Assignment(labels, counts, mind)


def mssc_objective(C: CentroidSet, X, n_threads: int = 1, counter=None) -> float:
    """Sum over points of the squared distance to the nearest center."""
    X = as_dataset(X)
    _check_pair(X, C)
    _, mind = nearest(X, C.centers, n_threads, counter)
    return total(mind)


def minmax_normalize(X) -> np.ndarray:
    """Scale every feature to [0, 1]; constant features become 0."""
    X = as_dataset(X)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    out = np.zeros_like(X)
    ok = span > 0
    out[:, ok] = (X[:, ok] - lo[ok]) / span[ok]
    return np.clip(out, 0.0, 1.0)
