"""Entropy-based feature ranking with a random forest."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hif_rplot.classify import TrainedStageModel, resolve_hyperparams
from hif_rplot.classify.models import fit_forest
from hif_rplot.classify.tree import LEAF
from hif_rplot.errors import DataError


def entropy(label_counts) -> float:
    """Shannon entropy in bits of a class histogram (``0 log 0 = 0``)."""
    counts = np.asarray(list(label_counts.values()) if isinstance(label_counts, dict) else label_counts,
                        dtype=np.float64)
    if counts.size == 0 or np.any(counts < 0) or counts.sum() == 0:
        raise DataError("entropy needs non-negative counts with at least one non-zero")
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def information_gain(parent_counts, children_counts) -> float:
    """``H(parent) - sum_v |D_v|/|D| H(D_v)`` for a partition of the parent."""
    parent = np.asarray(parent_counts, dtype=np.float64)
    children = [np.asarray(c, dtype=np.float64) for c in children_counts]
    if not children or any(c.shape != parent.shape for c in children):
        raise DataError("children must share the parent's class layout")
    if not np.array_equal(np.sum(children, axis=0), parent):
        raise DataError("children counts do not sum to the parent counts")
    total = parent.sum()
    rest = sum(c.sum() / total * entropy(c) for c in children if c.sum() > 0)
    return max(0.0, entropy(parent) - rest)


@dataclass(frozen=True)
class ImportanceRanking:
    names: tuple
    scores: tuple
    n_trees: int
    seed: int

    def __len__(self):
        return len(self.names)

    def items(self):
        return list(zip(self.names, self.scores))


def _ranked(names, scores, n_trees, seed) -> ImportanceRanking:
    order = sorted(range(len(names)), key=lambda i: (-scores[i], names[i]))
    return ImportanceRanking(
        tuple(names[i] for i in order), tuple(float(scores[i]) for i in order), n_trees, seed
    )


def rf_feature_importance(forest: TrainedStageModel, feature_names=None) -> ImportanceRanking:
    """Mean weighted entropy decrease per feature, normalised to sum to 1.

    Each split node contributes ``(W_node / W_root) * gain``; contributions
    are summed per tree, averaged over trees, then normalised.  If no tree
    split at all, every feature gets the same share.
    """
    if forest is None or not forest.state.get("trees"):
        raise DataError("forest is not trained")
    if forest.kind not in ("random-forest", "decision-tree"):
        raise DataError(f"importance needs a tree model, got {forest.kind!r}")
    names = tuple(feature_names) if feature_names is not None else forest.feature_names
    if len(names) != len(forest.feature_names):
        raise DataError("feature name count does not match the forest")
    trees = forest.state["trees"]
    total = np.zeros(len(names))
    for tree in trees:
        split = tree.feature != LEAF
        contrib = tree.weight[split] / tree.weight[0] * tree.gain[split]
        total += np.bincount(tree.feature[split], weights=contrib, minlength=len(names))
    total /= len(trees)
    s = total.sum()
    scores = total / s if s > 0 else np.full(len(names), 1.0 / len(names))
    return _ranked(names, scores.tolist(), len(trees), forest.seed)


def rank_features(X, labels, feature_names, n_trees: int = 100, seed: int = 0, **forest_hp) -> ImportanceRanking:
    """Fit an entropy forest on (possibly multi-class) labels and rank features."""
    X = np.asarray(X, dtype=np.float64)
    classes, y = np.unique(np.asarray(labels), return_inverse=True)
    if classes.size < 2:
        raise DataError("feature ranking needs at least two classes")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite features")
    hp = resolve_hyperparams("random-forest", dict(forest_hp, n_trees=n_trees))
    names = tuple(feature_names)
    state = fit_forest(X, y, hp, seed, names, n_classes=classes.size)
    model = TrainedStageModel("random-forest", hp, names, seed, state, classes=tuple(classes.tolist()))
    return rf_feature_importance(model)


def select_top_k(ranking: ImportanceRanking, k: int) -> list[str]:
    if not 1 <= k <= len(ranking):
        raise DataError(f"k={k} outside 1..{len(ranking)}")
    # re-sort so rankings built by hand obey the same tie rule
    ordered = sorted(ranking.items(), key=lambda it: (-it[1], it[0]))
    return [name for name, _ in ordered[:k]]

