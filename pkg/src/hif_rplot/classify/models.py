"""Fitting and scoring for the six classifier kinds.

Each ``_fit_<kind>`` returns a state dict; each ``_score_<kind>`` maps a
state and a feature matrix to scores in [0, 1].  Trees stay as
:class:`~hif_rplot.classify.tree.Tree` objects in memory and are flattened
only for serialisation.
"""

from __future__ import annotations

import math

import numpy as np

from hif_rplot import _rng
from hif_rplot.classify.tree import LEAF, Tree, feature_keys, grow_tree


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def _max_features(spec, d: int):
    if spec in (None, "all"):
        return None
    if spec == "sqrt":
        return max(1, int(math.isqrt(d)))
    if spec == "log2":
        return max(1, int(math.log2(d)))
    k = int(spec)
    if k < 1:
        raise ValueError("max_features must be >= 1")
    return min(k, d)


# -- decision tree / forest -------------------------------------------------

def _fit_decision_tree(X, y, hp, seed, names, n_classes=2):
    keys, rank = feature_keys(names)
    tree = grow_tree(
        X, y, criterion="entropy", n_classes=n_classes,
        max_depth=hp["max_depth"], min_samples_split=hp["min_samples_split"],
        max_features=_max_features(hp["max_features"], X.shape[1]),
        name_keys=keys, name_rank=rank, seed=_rng.derive_seed(seed, 0),
    )
    return {"trees": [tree]}


def _score_decision_tree(state, X):
    return state["trees"][0].predict_value(X)[:, 1]


def fit_forest(X, y, hp, seed, names, n_classes=2):
    """Random forest of entropy trees; tree ``t`` draws from stream ``derive_seed(seed, t)``."""
    keys, rank = feature_keys(names)
    n, d = X.shape
    mf = _max_features(hp["max_features"], d)
    trees = []
    for t in range(hp["n_trees"]):
        tseed = _rng.derive_seed(seed, t)
        if hp["bootstrap"]:
            idx = _rng.stream(tseed, 0).integers(0, n, size=n)
            weight = np.bincount(idx, minlength=n).astype(np.float64)
        else:
            weight = None
        trees.append(grow_tree(
            X, y, weight, criterion="entropy", n_classes=n_classes,
            max_depth=hp["max_depth"], min_samples_split=hp["min_samples_split"],
            max_features=mf, name_keys=keys, name_rank=rank, seed=tseed,
        ))
    return {"trees": trees}


def _fit_random_forest(X, y, hp, seed, names):
    return fit_forest(X, y, hp, seed, names)


def _score_random_forest(state, X):
    votes = np.zeros(X.shape[0])
    for tree in state["trees"]:
        votes += tree.predict_value(X)[:, 1] > 0.5
    return votes / len(state["trees"])


# -- AdaBoost (SAMME, two classes) ------------------------------------------

def _fit_adaboost(X, y, hp, seed, names):
    """SAMME with entropy stumps.

    Stops early when a stump is perfect on the weighted sample (it is kept
    with a weight exceeding all previous weights combined, so it decides
    alone) or when its weighted error reaches 0.5 (it is discarded).
    """
    keys, rank = feature_keys(names)
    n = X.shape[0]
    sign = np.where(y == 1, 1.0, -1.0)
    w = np.full(n, 1.0 / n)
    stumps, alphas = [], []
    stop = "max_rounds"
    for m in range(hp["n_estimators"]):
        stump = grow_tree(X, y, w, criterion="entropy", max_depth=1, name_keys=keys,
                          name_rank=rank, seed=_rng.derive_seed(seed, m))
        h = np.where(stump.predict_value(X)[:, 1] > 0.5, 1.0, -1.0)
        miss = h != sign
        err = float(w[miss].sum() / w.sum())
        if err <= 0.0:
            stumps.append(stump)
            alphas.append(sum(alphas) + 1.0)
            stop = "perfect_stump"
            break
        if err >= 0.5:
            stop = "chance_level"
            break
        alpha = math.log((1.0 - err) / err)
        stumps.append(stump)
        alphas.append(alpha)
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    return {"trees": stumps, "alphas": np.asarray(alphas, dtype=np.float64), "stop_reason": stop}


def adaboost_margin(state, X):
    margin = np.zeros(X.shape[0])
    for stump, alpha in zip(state["trees"], state["alphas"]):
        margin += alpha * np.where(stump.predict_value(X)[:, 1] > 0.5, 1.0, -1.0)
    return margin


def _score_adaboost(state, X):
    return sigmoid(adaboost_margin(state, X))


# -- gradient boosting (logistic loss) --------------------------------------

def _fit_gradient_boost(X, y, hp, seed, names):
    keys, rank = feature_keys(names)
    yf = y.astype(np.float64)
    p0 = yf.mean()
    f0 = math.log(p0 / (1.0 - p0))
    F = np.full(X.shape[0], f0)
    trees = []
    for m in range(hp["n_estimators"]):
        p = sigmoid(F)
        resid = yf - p
        tree = grow_tree(X, resid, criterion="mse", max_depth=hp["max_depth"],
                         min_samples_split=hp["min_samples_split"], name_keys=keys,
                         name_rank=rank, seed=_rng.derive_seed(seed, m))
        leaf = tree.apply(X)
        # one Newton step per leaf
        num = np.bincount(leaf, weights=resid, minlength=tree.n_nodes)
        den = np.bincount(leaf, weights=p * (1.0 - p), minlength=tree.n_nodes)
        is_leaf = tree.feature == LEAF
        gamma = np.where(is_leaf & (np.abs(den) > 1e-150), num / np.where(den == 0, 1.0, den), 0.0)
        tree.value = gamma[:, None]
        F += hp["learning_rate"] * gamma[leaf]
        trees.append(tree)
    return {"trees": trees, "init": np.array([f0])}


def gradient_boost_margin(state, X, learning_rate):
    F = np.full(X.shape[0], float(state["init"][0]))
    for tree in state["trees"]:
        F += learning_rate * tree.predict_value(X)[:, 0]
    return F


# -- k nearest neighbours ---------------------------------------------------

def _fit_knn(X, y, hp, seed, names):
    if hp["k"] < 1:
        raise ValueError("k must be >= 1")
    return {"X": X.copy(), "y": y.astype(np.int64)}


def knn_neighbours(state, x, k):
    """Indices of the ``k`` nearest training rows; equal distances keep the lower index."""
    d2 = ((state["X"] - x) ** 2).sum(axis=1)
    return np.argsort(d2, kind="stable")[: min(k, d2.size)]


def _score_knn(state, X, k):
    return np.array([state["y"][knn_neighbours(state, x, k)].mean() for x in X])


# -- multi-layer perceptron -------------------------------------------------

def _fit_mlp(X, y, hp, seed, names):
    """One ReLU hidden layer, logistic output, full-batch gradient descent on log loss."""
    n, d = X.shape
    h = hp["hidden"]
    if hp["standardize"]:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
    else:
        mu, sd = np.zeros(d), np.ones(d)
    Z = (X - mu) / sd
    rng = _rng.stream(seed, 0)
    a1 = math.sqrt(6.0 / (d + h))
    a2 = math.sqrt(6.0 / (h + 1))
    W1 = rng.uniform(-a1, a1, size=(d, h))
    b1 = np.zeros(h)
    W2 = rng.uniform(-a2, a2, size=h)
    b2 = 0.0
    yf = y.astype(np.float64)
    lr = hp["learning_rate"]
    for _ in range(hp["epochs"]):
        z1 = Z @ W1 + b1
        act = np.maximum(z1, 0.0)
        p = sigmoid(act @ W2 + b2)
        dz2 = (p - yf) / n
        gW2 = act.T @ dz2
        gb2 = dz2.sum()
        dz1 = np.outer(dz2, W2) * (z1 > 0)
        gW1 = Z.T @ dz1
        gb1 = dz1.sum(axis=0)
        W1 -= lr * gW1
        b1 -= lr * gb1
        W2 -= lr * gW2
        b2 -= lr * gb2
    return {"mu": mu, "sd": sd, "W1": W1, "b1": b1, "W2": W2, "b2": np.array([b2])}


def _score_mlp(state, X):
    Z = (X - state["mu"]) / state["sd"]
    act = np.maximum(Z @ state["W1"] + state["b1"], 0.0)
    return sigmoid(act @ state["W2"] + state["b2"][0])


FITTERS = {
    "decision-tree": _fit_decision_tree,
    "random-forest": _fit_random_forest,
    "gradient-boost": _fit_gradient_boost,
    "adaboost": _fit_adaboost,
    "knn": _fit_knn,
    "mlp": _fit_mlp,
}


def score(kind: str, state: dict, hp: dict, X: np.ndarray) -> np.ndarray:
    if kind == "decision-tree":
        return _score_decision_tree(state, X)
    if kind == "random-forest":
        return _score_random_forest(state, X)
    if kind == "gradient-boost":
        return sigmoid(gradient_boost_margin(state, X, hp["learning_rate"]))
    if kind == "adaboost":
        return _score_adaboost(state, X)
    if kind == "knn":
        return _score_knn(state, X, hp["k"])
    if kind == "mlp":
        return _score_mlp(state, X)
    raise ValueError(f"unknown classifier kind {kind!r}")


# -- flat array form --------------------------------------------------------

_TREE_FIELDS = ("feature", "threshold", "left", "right", "weight", "gain")


def pack_state(state: dict) -> dict[str, np.ndarray]:
    out = {}
    for key, val in state.items():
        if key == "trees":
            sizes = np.array([t.n_nodes for t in val], dtype=np.int64)
            out["trees.offsets"] = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
            for f in _TREE_FIELDS:
                parts = [getattr(t, f) for t in val]
                out[f"trees.{f}"] = np.concatenate(parts) if parts else np.zeros(0, dtype=np.float64)
            vals = [t.value for t in val]
            out["trees.value"] = np.vstack(vals) if vals else np.zeros((0, 1))
        elif isinstance(val, str):
            out[key] = np.frombuffer(val.encode("utf-8"), dtype=np.uint8).copy()
            out[f"{key}.__str__"] = np.zeros(0, dtype=np.uint8)
        else:
            out[key] = np.asarray(val)
    return out


def unpack_state(arrays: dict[str, np.ndarray]) -> dict:
    state = {}
    if "trees.offsets" in arrays:
        off = arrays["trees.offsets"]
        trees = []
        for i in range(off.size - 1):
            sl = slice(int(off[i]), int(off[i + 1]))
            kw = {f: arrays[f"trees.{f}"][sl].copy() for f in _TREE_FIELDS}
            kw["value"] = arrays["trees.value"][sl].copy()
            trees.append(Tree(**kw))
        state["trees"] = trees
    for key, val in arrays.items():
        if key.startswith("trees.") or key.endswith(".__str__"):
            continue
        if f"{key}.__str__" in arrays:
            state[key] = val.tobytes().decode("utf-8")
        else:
            state[key] = val
    return state
