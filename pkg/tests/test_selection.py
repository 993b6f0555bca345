import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hif_rplot import classify
from hif_rplot._rng import stream
from hif_rplot.errors import DataError
from hif_rplot.selection import (
    ImportanceRanking, entropy, information_gain, rank_features, rf_feature_importance, select_top_k,
)

counts = st.lists(st.integers(0, 50), min_size=1, max_size=6).filter(lambda c: sum(c) > 0)


def test_entropy_examples():
    assert entropy({"A": 4}) == 0.0
    assert entropy({"A": 1, "B": 1}) == 1.0
    assert entropy({"A": 3, "B": 1}) == pytest.approx(0.811278, abs=1e-6)
    with pytest.raises(DataError):
        entropy([0, 0])


def test_information_gain_examples():
    assert information_gain([2, 2], [[2, 0], [0, 2]]) == 1.0
    assert information_gain([4, 2], [[2, 1], [2, 1]]) == pytest.approx(0.0, abs=1e-15)
    assert information_gain([3, 1], [[2, 0], [1, 1]]) == pytest.approx(0.311278, abs=1e-6)
    with pytest.raises(DataError):
        information_gain([3, 1], [[2, 0], [1, 0]])


@given(c=counts)
def test_entropy_bounds(c):
    nonzero = sum(1 for v in c if v > 0)
    h = entropy(c)
    assert 0.0 <= h <= math.log2(nonzero) + 1e-12
    if nonzero == 1:
        assert h == 0.0
    if len(set(v for v in c if v > 0)) == 1:
        assert h == pytest.approx(math.log2(nonzero), abs=1e-12)


@given(data=st.data())
def test_information_gain_non_negative(data):
    k = data.draw(st.integers(1, 4))
    n_children = data.draw(st.integers(1, 4))
    children = [data.draw(st.lists(st.integers(0, 30), min_size=k, max_size=k)) for _ in range(n_children)]
    parent = np.sum(children, axis=0)
    if parent.sum() == 0:
        return
    assert information_gain(parent, children) >= 0.0


def _informative_data(n=120, d=6, seed=5):
    rng = stream(seed, 0)
    X = rng.normal(size=(n, d))
    y = (rng.uniform(size=n) < 0.5).astype(int)
    X[:, 2] = y + 0.1 * rng.normal(size=n)
    X[:, 4] = 3.0
    return X, y, tuple(f"feat{j}" for j in range(d))


def test_informative_feature_ranks_first_and_constant_gets_zero():
    X, y, names = _informative_data()
    ranking = rank_features(X, y, names, n_trees=30, seed=1)
    assert ranking.names[0] == "feat2"
    assert dict(ranking.items())["feat4"] == 0.0
    assert sum(ranking.scores) == pytest.approx(1.0, abs=1e-9)
    assert list(ranking.scores) == sorted(ranking.scores, reverse=True)
    assert sorted(ranking.names) == sorted(names)


def test_unused_feature_gets_zero():
    X, y, names = _informative_data()
    X2 = np.column_stack([(y > 0).astype(float), X[:, 0]])
    model = classify.fit("decision-tree", {}, X2, y, 0, ("good", "noise"))
    ranking = rf_feature_importance(model)
    assert dict(ranking.items()) == {"good": 1.0, "noise": 0.0}


def test_importance_multiclass_labels():
    X, y, names = _informative_data()
    labels = np.where(y == 1, "hif", np.where(X[:, 0] > 0, "type1", "normal"))
    ranking = rank_features(X, labels, names, n_trees=20, seed=3)
    assert set(ranking.names[:2]) == {"feat0", "feat2"}


def test_importance_permutation_invariance():
    X, y, names = _informative_data()
    base = dict(rank_features(X, y, names, n_trees=20, seed=9).items())
    perm = [3, 0, 5, 1, 4, 2]
    permuted = dict(rank_features(X[:, perm], y, [names[p] for p in perm], n_trees=20, seed=9).items())
    for n in names:
        assert permuted[n] == pytest.approx(base[n], abs=1e-9)


def test_importance_errors():
    X, y, names = _informative_data()
    with pytest.raises(DataError):
        rank_features(X, np.zeros(len(y)), names)
    model = classify.fit("knn", {}, X, y, 0)
    with pytest.raises(DataError):
        rf_feature_importance(model)


def test_select_top_k():
    r = ImportanceRanking(("b", "a", "c"), (0.4, 0.4, 0.2), 1, 0)
    assert select_top_k(r, 1) == ["a"]
    assert select_top_k(r, 3) == ["a", "b", "c"]
    for k in (0, 4):
        with pytest.raises(DataError):
            select_top_k(r, k)
