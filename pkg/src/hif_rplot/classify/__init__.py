"""Two-class classifiers with a uniform fit / predict / score contract.

Kinds: ``decision-tree``, ``random-forest``, ``gradient-boost``,
``adaboost``, ``knn``, ``mlp``.  All are implemented here on numpy; every
random draw goes through :mod:`hif_rplot._rng`, so a fit is a pure function
of ``(kind, hyperparameters, X, y, seed)``.

``predict`` is ``predict_score > 0.5``; a score of exactly 0.5 maps to the
negative class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hif_rplot.classify import models
from hif_rplot.classify.serialize import MAGIC, dumps_model, load_model, loads_model, save_model
from hif_rplot.errors import ConfigError, DataError

KINDS = ("random-forest", "knn", "decision-tree", "gradient-boost", "adaboost", "mlp")
TREE_KINDS = ("random-forest", "decision-tree", "gradient-boost", "adaboost")

SHORT_NAMES = {
    "random-forest": "RF",
    "knn": "k-NN",
    "decision-tree": "DT",
    "gradient-boost": "GB",
    "adaboost": "AB",
    "mlp": "MLP",
}

# (type, default); "depth" is an int or None, "features" is None/"all"/"sqrt"/"log2"/int
HYPERPARAMS = {
    "decision-tree": {"max_depth": ("depth", None), "min_samples_split": (int, 2),
                      "max_features": ("features", None)},
    "random-forest": {"n_trees": (int, 100), "max_depth": ("depth", None), "min_samples_split": (int, 2),
                      "max_features": ("features", "sqrt"), "bootstrap": (bool, True)},
    "gradient-boost": {"n_estimators": (int, 100), "learning_rate": (float, 0.1), "max_depth": ("depth", 3),
                       "min_samples_split": (int, 2)},
    "adaboost": {"n_estimators": (int, 50)},
    "knn": {"k": (int, 5)},
    "mlp": {"hidden": (int, 16), "epochs": (int, 200), "learning_rate": (float, 0.05),
            "standardize": (bool, True)},
}


def _coerce(kind, key, typ, value):
    if isinstance(value, str):
        v = value.strip().lower()
        if typ == "depth":
            return None if v in ("none", "unlimited", "") else int(v)
        if typ == "features":
            return None if v in ("none", "all") else (v if v in ("sqrt", "log2") else int(v))
        if typ is bool:
            if v in ("1", "true", "yes"):
                return True
            if v in ("0", "false", "no"):
                return False
            raise ValueError(value)
        return typ(v)
    if typ is int and isinstance(value, float) and value.is_integer():
        return int(value)
    if typ is float and isinstance(value, int):
        return float(value)
    return value


def resolve_hyperparams(kind: str, hyperparams=None) -> dict:
    """Defaults overlaid with ``hyperparams``; unknown keys raise ConfigError."""
    if kind not in HYPERPARAMS:
        raise ConfigError(f"unknown classifier kind {kind!r}")
    schema = HYPERPARAMS[kind]
    out = {k: default for k, (_, default) in schema.items()}
    for key, value in (hyperparams or {}).items():
        if key not in schema:
            raise ConfigError(f"{kind}: unknown hyperparameter {key!r}")
        try:
            out[key] = _coerce(kind, key, schema[key][0], value)
        except (TypeError, ValueError):
            raise ConfigError(f"{kind}.{key}: bad value {value!r}") from None
    return out


@dataclass
class TrainedStageModel:
    kind: str
    hyperparams: dict
    feature_names: tuple
    seed: int
    state: dict
    classes: tuple = (0, 1)
    meta: dict = field(default_factory=dict)
    # number of rows scored so far; not serialised
    n_evaluations: int = field(default=0, compare=False, repr=False)

    def scores(self, X) -> np.ndarray:
        return predict_scores(self, X)


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DataError(f"X {X.shape} and y {y.shape} do not match")
    if X.shape[0] < 2:
        raise DataError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite training features")
    labels = set(np.unique(y).tolist())
    if not labels <= {0, 1}:
        raise DataError(f"labels must be 0/1, got {sorted(labels)}")
    if len(labels) < 2:
        raise DataError("training labels contain a single class")
    return X, y.astype(np.int64)


def fit(kind: str, hyperparams, X, y, seed: int, feature_names=None) -> TrainedStageModel:
    hp = resolve_hyperparams(kind, hyperparams)
    X, y = _check_xy(X, y)
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{j}" for j in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise DataError(f"{len(names)} feature names for {X.shape[1]} columns")
    if len(set(names)) != len(names):
        raise DataError("duplicate feature names")
    state = models.FITTERS[kind](X, y, hp, int(seed), names)
    meta = {}
    if "stop_reason" in state:
        meta["stop_reason"] = state["stop_reason"]
    return TrainedStageModel(kind, hp, names, int(seed), state, meta=meta)


def _as_matrix(model: TrainedStageModel, X) -> np.ndarray:
    names = getattr(X, "names", None)
    if names is not None:
        if tuple(names) != model.feature_names:
            raise DataError("feature ordering does not match the model")
        X = X.values
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != len(model.feature_names):
        raise DataError(f"expected {len(model.feature_names)} features, got shape {X.shape}")
    return X


def predict_scores(model: TrainedStageModel, X) -> np.ndarray:
    if len(model.classes) != 2:
        raise DataError("scores are defined for two-class models only")
    X = _as_matrix(model, X)
    model.n_evaluations += X.shape[0]
    return models.score(model.kind, model.state, model.hyperparams, X)


def predict_score(model: TrainedStageModel, x) -> float:
    return float(predict_scores(model, x)[0])


def predict_labels(model: TrainedStageModel, X) -> np.ndarray:
    return (predict_scores(model, X) > 0.5).astype(np.int64)


def predict(model: TrainedStageModel, x) -> int:
    return int(predict_score(model, x) > 0.5)


__all__ = [
    "KINDS", "TREE_KINDS", "HYPERPARAMS", "MAGIC", "TrainedStageModel",
    "fit", "predict", "predict_score", "predict_scores", "predict_labels",
    "resolve_hyperparams", "save_model", "load_model", "dumps_model", "loads_model",
]
