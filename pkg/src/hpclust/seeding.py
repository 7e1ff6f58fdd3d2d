"""Greedy K-means++ seeding and reseeding of degenerate centers."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import CentroidSet, PreconditionError, as_dataset, nearest, point_distances, total

log = logging.getLogger(__name__)


@dataclass
class SeedConfig:
    candidates: int = 3
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    n_threads: int = 1

    def __post_init__(self):
        if self.candidates < 1:
            raise PreconditionError("candidates must be >= 1")


def _draw_d2(mind: np.ndarray, size: int, rng: np.random.Generator):
    """Indices drawn with replacement, with probability proportional to ``mind``.

    Rows with zero weight are never drawn.  Returns None when all weights are 0.
    """
    cum = np.cumsum(mind)
    mass = cum[-1]
    if not mass > 0:
        return None
    return np.searchsorted(cum, rng.random(size) * mass, side="right")


def reinit_degenerate(C: CentroidSet, S, cfg: SeedConfig | None = None, counter=None) -> CentroidSet:
    """Replace every degenerate center of ``C`` by greedy D^2 sampling on ``S``.

    Valid centers are kept.  Degenerate ones are filled in index order, each
    seeing the ones reseeded before it.  When no valid center exists the first
    pick is uniform over ``S``.  If ``S`` runs out of distinct rows the
    remaining centers stay degenerate.
    """
    cfg = cfg or SeedConfig()
    S = as_dataset(S)
    if C.n != S.shape[1]:
        raise PreconditionError(f"centroid dimension {C.n} != sample dimension {S.shape[1]}")
    if not C.degenerate.any():
        return C
    out = C.copy()
    rng = cfg.rng
    m = S.shape[0]
    valid, _ = out.active()
    mind = None
    if len(valid):
        _, mind = nearest(S, valid, cfg.n_threads, counter)

    for j in np.flatnonzero(out.degenerate):
        if mind is None:
            idx = int(rng.integers(m))
            out.centers[j] = S[idx]
            out.degenerate[j] = False
            mind = point_distances(S, S[idx], cfg.n_threads, counter)
            continue
        cands = _draw_d2(mind, cfg.candidates, rng)
        if cands is None:
            break
        best_pot, best_idx, best_d = np.inf, -1, None
        for c in cands:
            d = np.minimum(mind, point_distances(S, S[c], cfg.n_threads, counter))
            pot = total(d)
            if pot < best_pot:
                best_pot, best_idx, best_d = pot, int(c), d
        out.centers[j] = S[best_idx]
        out.degenerate[j] = False
        mind = best_d

    if out.degenerate.any():
        log.debug("sample has too few distinct rows: %d center(s) left degenerate",
                  out.n_degenerate)
    return out


def kmeanspp_seed(S, k: int, cfg: SeedConfig | None = None, counter=None) -> CentroidSet:
    S = as_dataset(S)
    if k < 1:
        raise PreconditionError("k must be >= 1")
    return reinit_degenerate(CentroidSet.empty(k, S.shape[1]), S, cfg, counter)
