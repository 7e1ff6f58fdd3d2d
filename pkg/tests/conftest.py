import numpy as np
import pytest

from hpclust import engine

SIX = np.array([0, 1, 2, 10, 11, 12], dtype=float).reshape(-1, 1)

_checked_runs = []


def check_run_invariants(res):
    """Keep-the-best and shared-best monotonicity on one engine result."""
    for w in res.per_worker:
        objs = [f for _, f in w.trace]
        stamps = [t for t, _ in w.trace]
        assert all(b < a for a, b in zip(objs, objs[1:])), f"worker {w.worker_id} incumbent worsened"
        assert all(b > a for a, b in zip(stamps, stamps[1:])), f"worker {w.worker_id} timestamps"
        if objs:
            assert w.objective == objs[-1]
    versions = [s.version for s in res.shared_history]
    assert versions == list(range(1, len(versions) + 1))
    published = [s.objective for s in res.shared_history]
    assert all(b < a for a, b in zip(published, published[1:])), "shared best worsened"
    accepted = {(w.worker_id, f) for w in res.per_worker for _, f in w.trace}
    for s in res.shared_history:
        assert (s.worker, s.objective) in accepted, "published snapshot is no worker's incumbent"


@pytest.fixture(autouse=True)
def _keep_the_best_guard(monkeypatch):
    """Every engine run made anywhere in the suite is checked for the keep-the-best invariants."""
    original = engine.run

    def checked(X, cfg):
        res = original(X, cfg)
        check_run_invariants(res)
        _checked_runs.append(1)
        return res

    monkeypatch.setattr(engine, "run", checked)
    for mod in ("hpclust", "hpclust.bench", "hpclust.cli"):
        monkeypatch.setattr(f"{mod}.run", checked)
    yield


@pytest.fixture
def six():
    return SIX.copy()


def checked_run_count():
    return len(_checked_runs)
