"""Sample-based MSSC search with keep-the-best workers.

Each worker repeatedly draws a random sample, reseeds any degenerate
centers on it with greedy K-means++, runs Lloyd iterations from its starting
centroids and keeps the result only if the sample objective beats its
incumbent.  The strategies differ in where a step's starting centroids come
from:

* ``inner``       - one worker, distance scans split over threads.
* ``competitive`` - every worker restarts from its own incumbent.
* ``cooperative`` - every worker restarts from the best published incumbent.
* ``hybrid``      - competitive for the first part of the budget, then
  cooperative; incumbents carry over.

When a run is bounded only by ``max_samples`` the workers advance in lockstep
rounds (all read the shared best at the start of a round, publications are
applied in worker order afterwards), which makes multi-worker runs
reproducible.  With a time limit the workers run free.
"""
from __future__ import annotations

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (Assignment, CentroidSet, ConfigError, DistanceCounter,
                   NoSolutionError, PreconditionError, as_dataset, default_threads,
                   nearest, total)
from .lloyd import LloydConfig, LloydOutcome, kmeans
from .seeding import SeedConfig, reinit_degenerate

log = logging.getLogger(__name__)

STRATEGIES = ("inner", "competitive", "cooperative", "hybrid")


@dataclass
class Strategy:
    kind: str = "competitive"
    # hybrid only: (first phase, second phase) in the units of the budget,
    # seconds with a time limit, samples otherwise
    phase_split: tuple | None = None

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.kind!r}; expected one of {STRATEGIES}")


@dataclass
class EngineConfig:
    k: int
    sample_size: int
    n_workers: int = 8
    time_limit: float | None = None
    max_samples: int | None = None
    strategy: Strategy | str = "competitive"
    master_seed: int = 0
    lloyd: LloydConfig = field(default_factory=LloydConfig)
    candidates: int = 3
    n_threads: int | None = None
    clock: str = "wall"
    final_assign: bool = True

    def __post_init__(self):
        if isinstance(self.strategy, str):
            self.strategy = Strategy(self.strategy)

    @property
    def budget(self) -> float:
        return self.time_limit if self.time_limit is not None else self.max_samples

    def phases(self) -> tuple:
        split = self.strategy.phase_split
        if split is None:
            return (self.budget / 2, self.budget / 2)
        return tuple(split)

    def validate(self, m: int) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 1 <= self.sample_size <= m:
            raise ConfigError(f"sample size must be in [1, {m}], got {self.sample_size}")
        if self.n_workers < 1:
            raise ConfigError("need at least one worker")
        if self.time_limit is None and self.max_samples is None:
            raise ConfigError("set a time limit, a sample budget, or both")
        if self.time_limit is not None and not self.time_limit >= 0:
            raise ConfigError("time limit must be >= 0")
        if self.max_samples is not None and self.max_samples < 1:
            raise ConfigError("max_samples must be >= 1")
        if self.clock not in ("wall", "logical"):
            raise ConfigError(f"unknown clock {self.clock!r}")
        if self.clock == "logical" and self.time_limit is not None:
            raise ConfigError("the logical clock counts samples; use max_samples instead of a time limit")
        if self.strategy.kind == "hybrid":
            t1, t2 = self.phases()
            if t1 < 0 or t2 < 0:
                raise ConfigError("hybrid phase lengths must be >= 0")
            if not math.isclose(t1 + t2, self.budget, rel_tol=1e-9, abs_tol=1e-12):
                raise ConfigError(f"hybrid phases {t1} + {t2} must add up to the budget {self.budget}")


@dataclass
class WorkerState:
    worker_id: int
    centroids: CentroidSet
    objective: float = math.inf
    elapsed: float = 0.0
    samples_processed: int = 0
    trace: list = field(default_factory=list)
    rng: np.random.Generator = field(default=None, repr=False)
    counter: DistanceCounter = field(default_factory=DistanceCounter, repr=False)
    accepted_last: bool = False
    finished_at: float | None = None

    @property
    def last_update(self) -> float | None:
        return self.trace[-1][0] if self.trace else None


class Snapshot(NamedTuple):
    version: int
    worker: int
    objective: float
    centroids: CentroidSet


class SharedBest:
    """Best incumbent published by any worker.

    Reads return an immutable snapshot; a publication replaces the snapshot
    only if its objective is strictly lower than the published one.
    """

    def __init__(self, k: int, n: int):
        self._lock = threading.Lock()
        self._snap = Snapshot(0, -1, math.inf, _frozen(CentroidSet.empty(k, n)))
        self.history: list[Snapshot] = []

    def snapshot(self) -> Snapshot:
        with self._lock:
            return self._snap

    def publish(self, worker: int, objective: float, centroids: CentroidSet) -> bool:
        with self._lock:
            cur = self._snap
            if not objective < cur.objective:
                return False
            self._snap = Snapshot(cur.version + 1, worker, objective, _frozen(centroids))
            self.history.append(self._snap)
            return True


def _frozen(C: CentroidSet) -> CentroidSet:
    C = C.copy()
    C.centers.flags.writeable = False
    C.degenerate.flags.writeable = False
    return C


class WallClock:
    def __init__(self):
        self.start = time.perf_counter()

    def now(self, state: WorkerState) -> float:
        return time.perf_counter() - self.start


class SampleClock:
    """Deterministic clock: a worker's time is its number of processed samples."""

    def now(self, state: WorkerState) -> float:
        return float(state.samples_processed)


@dataclass
class ClusteringResult:
    centroids: CentroidSet
    full_objective: float | None
    assignment: Assignment | None
    clustering_time: float
    per_worker: list
    distance_evals: int
    best_worker: int = 0
    best_sample_objective: float | None = None
    fastest_finisher_time: float | None = None
    wall_time: float = 0.0
    shared_history: list = field(default_factory=list, repr=False)
    extras: dict = field(default_factory=dict)

    @property
    def samples(self) -> list:
        return [w.samples_processed for w in self.per_worker]


def draw_sample(X, s: int, rng: np.random.Generator) -> np.ndarray:
    """``s`` distinct rows of ``X``, uniformly without replacement."""
    m = X.shape[0]
    if not 1 <= s <= m:
        raise ConfigError(f"sample size must be in [1, {m}], got {s}")
    return X[rng.choice(m, size=s, replace=False)]


def local_search(S, C0: CentroidSet, cfg: LloydConfig, counter=None) -> LloydOutcome:
    """``kmeans`` that tolerates centers left degenerate by an exhausted sample.

    Lloyd runs on the valid centers only; the others stay flagged.
    """
    if not C0.degenerate.any():
        return kmeans(S, C0, cfg, counter)
    valid, idx = C0.active()
    out = kmeans(S, CentroidSet(valid), cfg, counter)
    full = C0.copy()
    full.centers[idx] = out.centroids.centers
    full.degenerate[idx] = out.centroids.degenerate
    out.centroids = full
    out.labels = idx[out.labels]
    return out


def _threads(cfg: EngineConfig) -> int:
    if cfg.strategy.kind != "inner":
        return 1
    return cfg.n_threads or default_threads()


def _lloyd_cfg(cfg: EngineConfig) -> LloydConfig:
    inner = cfg.strategy.kind == "inner"
    return LloydConfig(cfg.lloyd.max_iters, cfg.lloyd.rel_tol, parallel_rows=inner,
                       n_threads=_threads(cfg) if inner else None)


def worker_step(state: WorkerState, X, init_source: CentroidSet, cfg: EngineConfig,
                clock, lloyd_cfg: LloydConfig | None = None) -> WorkerState:
    """Process one sample and update the worker's incumbent in place."""
    lloyd_cfg = lloyd_cfg or _lloyd_cfg(cfg)
    S = draw_sample(X, cfg.sample_size, state.rng)
    seed_cfg = SeedConfig(cfg.candidates, state.rng, _threads(cfg))
    C0 = reinit_degenerate(init_source, S, seed_cfg, state.counter)
    out = local_search(S, C0, lloyd_cfg, state.counter)
    state.samples_processed += 1
    state.elapsed = clock.now(state)
    state.accepted_last = out.objective < state.objective
    if state.accepted_last:
        if state.trace:
            assert out.objective < state.trace[-1][1] and state.elapsed > state.trace[-1][0]
        state.centroids = out.centroids
        state.objective = out.objective
        state.trace.append((state.elapsed, out.objective))
    return state


def select_best(workers) -> tuple:
    best = None
    for w in workers:
        if w.objective < math.inf and (best is None or w.objective < best.objective):
            best = w
    if best is None:
        raise NoSolutionError("no solution produced: every worker incumbent is infinite")
    return best.worker_id, best.centroids


def final_assignment(X, C: CentroidSet, n_threads: int = 1, counter=None):
    """Assign the whole dataset to ``C`` and return ``(assignment, objective)``."""
    X = as_dataset(X)
    if C.degenerate.any():
        raise PreconditionError("final assignment needs a centroid set without degenerate centers")
    labels, mind = nearest(X, C.centers, n_threads, counter)
    return Assignment(labels, np.bincount(labels, minlength=C.k), mind), total(mind)


def assign_active(X, C: CentroidSet, n_threads: int = 1, counter=None):
    """Like ``final_assignment`` but skips degenerate centers (labels keep original indices)."""
    valid, idx = C.active()
    A, f = final_assignment(X, CentroidSet(valid), n_threads, counter)
    labels = idx[A.labels]
    return Assignment(labels, np.bincount(labels, minlength=C.k), A.distances), f


# --------------------------------------------------------------------------
# drivers

def _mode(state: WorkerState, cfg: EngineConfig) -> str:
    kind = cfg.strategy.kind
    if kind in ("inner", "competitive"):
        return "competitive"
    if kind == "cooperative":
        return "cooperative"
    position = state.elapsed if cfg.time_limit is not None else state.samples_processed
    return "competitive" if position < cfg.phases()[0] else "cooperative"


def _done(state: WorkerState, cfg: EngineConfig) -> bool:
    if cfg.time_limit is not None and state.elapsed >= cfg.time_limit:
        return True
    return cfg.max_samples is not None and state.samples_processed >= cfg.max_samples


def _publishes(cfg: EngineConfig) -> bool:
    return cfg.strategy.kind in ("cooperative", "hybrid")


def _source(state, shared, cfg):
    if _mode(state, cfg) == "competitive":
        return state.centroids
    return shared.snapshot().centroids


def _free_run(state, X, cfg, shared, clock, lloyd_cfg):
    publish = _publishes(cfg)
    while True:
        state.elapsed = clock.now(state)
        if _done(state, cfg):
            break
        worker_step(state, X, _source(state, shared, cfg), cfg, clock, lloyd_cfg)
        if publish and state.accepted_last:
            shared.publish(state.worker_id, state.objective, state.centroids)
    state.finished_at = clock.now(state)
    return state


def _lockstep(workers, X, cfg, shared, clock, lloyd_cfg):
    publish = _publishes(cfg)
    with ThreadPoolExecutor(len(workers), thread_name_prefix="hpclust-worker") as pool:
        while True:
            active = [w for w in workers if not _done(w, cfg)]
            if not active:
                break
            snap = shared.snapshot()
            futures = []
            for w in active:
                src = w.centroids if _mode(w, cfg) == "competitive" else snap.centroids
                futures.append(pool.submit(worker_step, w, X, src, cfg, clock, lloyd_cfg))
            for f in futures:
                f.result()
            for w in active:
                if _done(w, cfg):
                    w.finished_at = clock.now(w)
                if publish and w.accepted_last:
                    shared.publish(w.worker_id, w.objective, w.centroids)


def worker_rng(master_seed: int, worker_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(worker_id,)))


def run(X, cfg: EngineConfig) -> ClusteringResult:
    X = as_dataset(X)
    cfg.validate(X.shape[0])
    m, n = X.shape
    W = 1 if cfg.strategy.kind == "inner" else cfg.n_workers
    workers = [WorkerState(i, CentroidSet.empty(cfg.k, n), rng=worker_rng(cfg.master_seed, i))
               for i in range(W)]
    shared = SharedBest(cfg.k, n)
    clock = WallClock() if cfg.clock == "wall" else SampleClock()
    lloyd_cfg = _lloyd_cfg(cfg)
    started = time.perf_counter()

    if W == 1:
        _free_run(workers[0], X, cfg, shared, clock, lloyd_cfg)
    elif cfg.time_limit is None:
        _lockstep(workers, X, cfg, shared, clock, lloyd_cfg)
    else:
        with ThreadPoolExecutor(W, thread_name_prefix="hpclust-worker") as pool:
            futures = [pool.submit(_free_run, w, X, cfg, shared, clock, lloyd_cfg) for w in workers]
            for f in futures:
                f.result()

    best_id, C = select_best(workers)
    n_d = sum(w.counter.count for w in workers)
    A = f_full = None
    if cfg.final_assign:
        final_counter = DistanceCounter()
        A, f_full = assign_active(X, C, _threads(cfg), final_counter)
        n_d += final_counter.count

    updated = [w.last_update for w in workers if w.last_update is not None]
    fastest = min(workers, key=lambda w: (w.finished_at, w.worker_id))
    result = ClusteringResult(
        centroids=C,
        full_objective=f_full,
        assignment=A,
        clustering_time=min(updated),
        per_worker=workers,
        distance_evals=n_d,
        best_worker=best_id,
        best_sample_objective=workers[best_id].objective,
        fastest_finisher_time=fastest.last_update,
        wall_time=time.perf_counter() - started,
        shared_history=list(shared.history),
    )
    log.debug("run %s: f=%s t=%.3f n_d=%d samples=%s", cfg.strategy.kind, f_full,
              result.clustering_time, n_d, result.samples)
    return result
