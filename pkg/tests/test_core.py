import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hpclust.core import (CentroidSet, DistanceCounter, PreconditionError, as_dataset,
                          assign_nearest, minmax_normalize, mssc_objective, squared_distance)


def labels_oracle(X, k):
    """Minimum MSSC over every labelling of the rows (k ** m of them)."""
    best = np.inf
    for labels in itertools.product(range(k), repeat=len(X)):
        labels = np.array(labels)
        cost = 0.0
        for j in range(k):
            pts = X[labels == j]
            if len(pts):
                cost += ((pts - pts.mean(axis=0)) ** 2).sum()
        best = min(best, cost)
    return best


@pytest.mark.parametrize("a, b, expected", [
    ((0, 0), (3, 4), 25.0),
    ((1.5, -2.0), (1.5, -2.0), 0.0),
    ((1, 2), (4, 6), 25.0),
])
def test_squared_distance(a, b, expected):
    assert squared_distance(a, b) == expected
    assert squared_distance(b, a) == expected


def test_squared_distance_dimension_mismatch():
    with pytest.raises(PreconditionError):
        squared_distance((1, 2), (1, 2, 3))


def test_squared_distance_counts():
    c = DistanceCounter()
    squared_distance((0,), (1,), counter=c)
    assert c.count == 1


def test_assign_examples():
    A = assign_nearest([[0], [10]], CentroidSet([[1], [9]]))
    assert A.labels.tolist() == [0, 1]
    A = assign_nearest(np.random.default_rng(0).normal(size=(7, 3)), CentroidSet([[0, 0, 0]]))
    assert A.labels.tolist() == [0] * 7 and A.counts.tolist() == [7]
    # tie goes to the lower index
    assert assign_nearest([[5]], CentroidSet([[4], [6]])).labels.tolist() == [0]


def test_assign_refuses_degenerate():
    C = CentroidSet([[0.0], [1.0]], [False, True])
    with pytest.raises(PreconditionError):
        assign_nearest([[0.0]], C)
    with pytest.raises(PreconditionError):
        mssc_objective(C, [[0.0]])


def test_assign_dimension_mismatch():
    with pytest.raises(PreconditionError):
        assign_nearest([[0.0, 1.0]], CentroidSet([[0.0]]))


def test_objective_examples(six):
    assert mssc_objective(CentroidSet([[1, 0]]), [[0, 0], [2, 0]]) == 2.0
    X = np.random.default_rng(1).normal(size=(5, 2))
    assert mssc_objective(CentroidSet(X), X) == 0.0
    assert mssc_objective(CentroidSet([[1], [11]]), six) == 4.0
    assert labels_oracle(six, 2) == 4.0


def test_dataset_validation():
    with pytest.raises(PreconditionError):
        as_dataset([[np.nan, 1.0]])
    with pytest.raises(PreconditionError):
        as_dataset(np.empty((0, 3)))
    assert as_dataset([1.0, 2.0]).shape == (2, 1)


def test_centroidset_rejects_nonfinite_valid_center():
    with pytest.raises(PreconditionError):
        CentroidSet([[np.inf]])


@pytest.mark.parametrize("column, expected", [
    ([0, 5, 10], [0, 0.5, 1]),
    ([7, 7, 7], [0, 0, 0]),
    ([-40, 40], [0, 1]),
])
def test_minmax_examples(column, expected):
    out = minmax_normalize(np.array(column, dtype=float).reshape(-1, 1))
    assert out.ravel().tolist() == expected


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def data_and_centers(draw):
    m = draw(st.integers(1, 30))
    n = draw(st.integers(1, 4))
    k = draw(st.integers(1, 5))
    X = draw(arrays(np.float64, (m, n), elements=finite))
    C = draw(arrays(np.float64, (k, n), elements=finite))
    return X, C


@settings(max_examples=200, deadline=None)
@given(data_and_centers())
def test_objective_matches_assignment(pair):
    X, C = pair
    cs = CentroidSet(C)
    A = assign_nearest(X, cs)
    direct = sum(squared_distance(x, C[j]) for x, j in zip(X, A.labels))
    assert mssc_objective(cs, X) == pytest.approx(direct, rel=1e-12, abs=1e-9)
    assert A.counts.sum() == len(X)
    assert A.counts.tolist() == np.bincount(A.labels, minlength=len(C)).tolist()
    # labels really are argmins with lowest-index ties
    for x, j in zip(X, A.labels):
        d = [squared_distance(x, c) for c in C]
        assert j == int(np.argmin(d))


@settings(max_examples=100, deadline=None)
@given(data_and_centers(), st.randoms())
def test_assignment_permutation_invariant(pair, rnd):
    X, C = pair
    perm = list(range(len(X)))
    rnd.shuffle(perm)
    a = assign_nearest(X, CentroidSet(C)).labels
    b = assign_nearest(X[perm], CentroidSet(C)).labels
    assert b.tolist() == a[perm].tolist()


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 4)), elements=finite))
def test_minmax_idempotent(X):
    once = minmax_normalize(X)
    assert once.min() >= 0 and once.max() <= 1
    assert np.allclose(minmax_normalize(once), once, rtol=0, atol=1e-12)


def test_parallel_rows_identical():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(5000, 6))
    C = CentroidSet(rng.normal(size=(7, 6)))
    seq = assign_nearest(X, C, n_threads=1)
    par = assign_nearest(X, C, n_threads=4)
    assert np.array_equal(seq.labels, par.labels)
    assert mssc_objective(C, X, n_threads=1) == mssc_objective(C, X, n_threads=4)


def test_counter_counts_assignment():
    c = DistanceCounter()
    assign_nearest(np.zeros((10, 2)), CentroidSet(np.zeros((3, 2))), counter=c)
    assert c.count == 30
