import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hif_rplot import classify
from hif_rplot._rng import stream
from hif_rplot.classify import KINDS, MAGIC, dumps_model, fit, loads_model, predict, predict_scores
from hif_rplot.classify.models import adaboost_margin
from hif_rplot.errors import ConfigError, DataError
from hif_rplot.features import FeatureVector
from hif_rplot.signalgen import EventClass

FAST = {"random-forest": {"n_trees": 15}, "gradient-boost": {"n_estimators": 20},
        "adaboost": {"n_estimators": 20}, "mlp": {"epochs": 100}}


def _blobs(n=80, d=4, seed=3, sep=2.0):
    rng = stream(seed, 0)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d)) + sep * y[:, None]
    return X, y


@pytest.mark.parametrize("kind", KINDS)
def test_fit_predict_contract(kind):
    X, y = _blobs()
    model = fit(kind, FAST.get(kind, {}), X, y, seed=4)
    s = predict_scores(model, X)
    assert s.shape == (len(y),)
    assert np.all((s >= 0) & (s <= 1))
    assert np.mean((s > 0.5) == y) > 0.85
    np.testing.assert_array_equal(classify.predict_labels(model, X), (s > 0.5).astype(int))
    assert predict(model, X[0]) == int(s[0] > 0.5)
    again = fit(kind, FAST.get(kind, {}), X, y, seed=4)
    assert dumps_model(again) == dumps_model(model)


@pytest.mark.parametrize("kind", KINDS)
def test_serialization_round_trip(kind, tmp_path):
    X, y = _blobs()
    model = fit(kind, FAST.get(kind, {}), X, y, seed=2)
    model.meta["stage"] = 2
    path = tmp_path / "m.bin"
    classify.save_model(model, path)
    loaded = classify.load_model(path)
    probe = stream(1, 1).normal(size=(100, X.shape[1])) * 3
    np.testing.assert_array_equal(predict_scores(loaded, probe), predict_scores(model, probe))
    assert loaded.meta["stage"] == 2 and loaded.feature_names == model.feature_names
    assert dumps_model(loaded) == dumps_model(model)
    assert path.read_bytes()[:5] == MAGIC


def test_bad_model_files(tmp_path):
    X, y = _blobs()
    data = dumps_model(fit("knn", {}, X, y, 0))
    with pytest.raises(DataError, match="version"):
        loads_model(data[:4] + b"9" + data[5:])
    with pytest.raises(DataError):
        loads_model(b"junk" + data)
    with pytest.raises(DataError):
        loads_model(data[:-3])
    with pytest.raises(DataError):
        classify.load_model(tmp_path / "missing.bin")


def test_decision_tree_memorizes():
    rng = stream(8, 0)
    X = rng.normal(size=(150, 5))
    y = (rng.uniform(size=150) < 0.4).astype(int)
    model = fit("decision-tree", {}, X, y, 0)
    np.testing.assert_array_equal(classify.predict_labels(model, X), y)


def test_decision_tree_single_split_on_threshold_data():
    x = np.linspace(0, 1, 40)[:, None]
    y = (x[:, 0] > 0.6).astype(int)
    model = fit("decision-tree", {}, x, y, 0)
    tree = model.state["trees"][0]
    assert tree.n_nodes == 3 and tree.depth == 1
    leaves = tree.value[tree.feature == -1][:, 1]
    assert sorted(leaves.tolist()) == [0.0, 1.0]


def test_knn_k1_memorizes():
    X, y = _blobs(sep=0.5)
    model = fit("knn", {"k": 1}, X, y, 0)
    np.testing.assert_array_equal(classify.predict_labels(model, X), y)


def test_single_tree_forest_equals_tree():
    X, y = _blobs(sep=0.7)
    probe = stream(2, 2).normal(size=(60, 4))
    rf = fit("random-forest", {"n_trees": 1, "bootstrap": False, "max_features": "all"}, X, y, 5)
    dt = fit("decision-tree", {}, X, y, 5)
    np.testing.assert_array_equal(classify.predict_labels(rf, probe), classify.predict_labels(dt, probe))


def test_forest_score_is_vote_fraction():
    X, y = _blobs(sep=0.8)
    rf = fit("random-forest", {"n_trees": 9}, X, y, 1)
    votes = np.array([t.predict_value(X)[:, 1] > 0.5 for t in rf.state["trees"]])
    np.testing.assert_array_equal(predict_scores(rf, X), votes.mean(axis=0))
    np.testing.assert_array_equal(classify.predict_labels(rf, X), votes.sum(axis=0) > 4.5)


def test_knn_vote_and_tie_rule():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [10.0]])
    y = np.array([1, 1, 0, 0, 1])
    m3 = fit("knn", {"k": 3}, X, y, 0)
    assert predict_scores(m3, [[0.9]])[0] == pytest.approx(2 / 3)
    assert predict(m3, [0.9]) == 1
    m4 = fit("knn", {"k": 4}, X, y, 0)
    assert predict_scores(m4, [[1.5]])[0] == 0.5
    assert predict(m4, [1.5]) == 0


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 200), d=st.integers(1, 4), k=st.integers(1, 9))
def test_knn_matches_brute_force(seed, n, d, k):
    rng = stream(seed, 0)
    X = rng.integers(-3, 4, size=(n, d)).astype(float)
    y = rng.integers(0, 2, size=n)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    Q = rng.integers(-3, 4, size=(20, d)).astype(float)
    model = fit("knn", {"k": k}, X, y, 0)
    expected = []
    for q in Q:
        dist = [sum((a - b) ** 2 for a, b in zip(row, q)) for row in X]
        nearest = sorted(range(n), key=lambda i: (dist[i], i))[:k]
        expected.append(sum(y[i] for i in nearest) / len(nearest))
    np.testing.assert_array_equal(predict_scores(model, Q), expected)


def test_adaboost_sign_rule_and_stops():
    X, y = _blobs(sep=1.0)
    ab = fit("adaboost", {"n_estimators": 15}, X, y, 0)
    margin = adaboost_margin(ab.state, X)
    np.testing.assert_array_equal(classify.predict_labels(ab, X), (margin > 0).astype(int))
    assert np.all(np.isfinite(ab.state["alphas"]))
    assert ab.meta["stop_reason"] == "max_rounds"
    x = np.arange(10.0)[:, None]
    perfect = fit("adaboost", {}, x, (x[:, 0] > 4).astype(int), 0)
    assert perfect.meta["stop_reason"] == "perfect_stump" and len(perfect.state["trees"]) == 1
    # identical rows with conflicting labels: no stump beats chance
    flat = fit("adaboost", {}, np.zeros((6, 1)), np.array([0, 1, 0, 1, 0, 1]), 0)
    assert flat.meta["stop_reason"] == "chance_level"
    assert np.all(predict_scores(flat, np.zeros((2, 1))) == 0.5)


@settings(max_examples=30)
@given(seed=st.integers(0, 10_000), kind=st.sampled_from(KINDS))
def test_predict_consistent_with_score(seed, kind):
    X, y = _blobs(n=30, d=3, seed=seed, sep=0.5)
    model = fit(kind, {"random-forest": {"n_trees": 5}, "gradient-boost": {"n_estimators": 5},
                       "adaboost": {"n_estimators": 5}, "mlp": {"epochs": 20}}.get(kind, {}), X, y, seed)
    Q = stream(seed, 3).normal(size=(25, 3))
    s = predict_scores(model, Q)
    assert [predict(model, q) for q in Q] == [int(v > 0.5) for v in s]


def test_input_errors():
    X, y = _blobs()
    with pytest.raises(DataError):
        fit("knn", {}, X, np.zeros(len(y)), 0)
    with pytest.raises(DataError):
        bad = X.copy()
        bad[3, 1] = np.nan
        fit("knn", {}, bad, y, 0)
    with pytest.raises(ConfigError, match="depthh"):
        fit("decision-tree", {"depthh": 3}, X, y, 0)
    with pytest.raises(ConfigError):
        fit("svm", {}, X, y, 0)
    model = fit("knn", {}, X, y, 0, feature_names=["p", "q", "r", "s"])
    with pytest.raises(DataError):
        predict_scores(model, X[:, :3])
    fv = FeatureVector(0, EventClass("normal"), ("q", "p", "r", "s"), X[0])
    with pytest.raises(DataError, match="ordering"):
        predict_scores(model, fv)
    ok = FeatureVector(0, EventClass("normal"), ("p", "q", "r", "s"), X[0])
    assert predict_scores(model, ok).shape == (1,)


def test_hyperparams_from_strings():
    hp = classify.resolve_hyperparams("random-forest", {"n_trees": "7", "max_depth": "none", "bootstrap": "false"})
    assert hp["n_trees"] == 7 and hp["max_depth"] is None and hp["bootstrap"] is False
    with pytest.raises(ConfigError):
        classify.resolve_hyperparams("knn", {"k": "many"})
