"""Binary-threshold decision trees shared by every tree-based learner.

Splits are CART-style ``x[f] <= threshold`` with thresholds at midpoints of
consecutive distinct sorted values.  Two criteria are supported: ``entropy``
(weighted class counts, information gain in bits) and ``mse`` (weighted
squared error, used by gradient boosting).

Determinism rules, which also make a forest invariant to column order:

* candidate features at a node are the first ``max_features`` features that
  are non-constant inside the node, ordered by a per-node key
  ``splitmix64(name_key ^ node_key)``, where ``name_key`` hashes the feature
  name and ``node_key`` derives from ``(seed, node number in creation order)``;
* equal gains resolve to the lexicographically smallest feature name, then
  the smallest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from hif_rplot import _rng

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray    # int64, LEAF for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray       # int64
    right: np.ndarray      # int64
    value: np.ndarray      # (n_nodes, n_outputs) class fractions or regression mean
    weight: np.ndarray     # weighted sample count reaching the node
    gain: np.ndarray       # impurity decrease of the node's split (0 for leaves)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.nonzero(active)[0]
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def _xlogx(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)


def entropy_of(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of weighted class counts along the last axis."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, counts / np.where(total > 0, total, 1.0), 0.0)
    return -_xlogx(p).sum(axis=-1)


def _best_split(Xn, Yn, wn, cols, criterion, name_rank):
    """Best (gain, column, threshold) over ``cols`` or None if no valid split."""
    Xs = Xn[:, cols]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    if criterion == "entropy":
        cw = np.cumsum(Yn[order], axis=0)  # (n, c, K)
        total = cw[-1]
        left = cw[:-1]
        right = total[None] - left
        wl = left.sum(-1)
        wr = right.sum(-1)
        w = total.sum(-1)
        parent = entropy_of(total)
        gain = parent - (wl * entropy_of(left) + wr * entropy_of(right)) / w
    else:
        wy = (wn * Yn)[order]
        ww = wn[order]
        s1 = np.cumsum(wy, axis=0)
        s0 = np.cumsum(ww, axis=0)
        s2 = np.cumsum(wy * Yn[order], axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            sse_l = s2[:-1] - s1[:-1] ** 2 / s0[:-1]
            r0, r1, r2 = s0[-1] - s0[:-1], s1[-1] - s1[:-1], s2[-1] - s2[:-1]
            sse_r = r2 - r1 ** 2 / r0
        parent = s2[-1] - s1[-1] ** 2 / s0[-1]
        gain = parent - sse_l - sse_r
    gain = np.where(valid, gain, -np.inf)
    best = gain.max()
    tied_cols = np.nonzero((gain == best).any(axis=0))[0]
    c = tied_cols[np.argmin(name_rank[cols[tied_cols]])]
    i = int(np.argmax(gain[:, c] == best))
    lo, hi = xs[i, c], xs[i + 1, c]
    thr = lo + (hi - lo) / 2.0
    if not (lo <= thr < hi):
        thr = lo
    return float(max(best, 0.0)), int(cols[c]), float(thr)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: Optional[np.ndarray] = None,
    *,
    criterion: str = "entropy",
    n_classes: int = 2,
    max_depth: Optional[int] = None,
    min_samples_split: int = 2,
    max_features: Optional[int] = None,
    name_keys: Optional[np.ndarray] = None,
    name_rank: Optional[np.ndarray] = None,
    seed: int = 0,
) -> Tree:
    """Grow one tree on rows with positive weight.

    ``y`` holds class indices ``0..n_classes-1`` for ``entropy`` and real
    targets for ``mse``.  ``name_keys`` / ``name_rank`` come from
    :func:`feature_keys`; they default to column-index based keys.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    if name_keys is None or name_rank is None:
        name_keys, name_rank = feature_keys([str(j).zfill(12) for j in range(d)])
    if criterion == "entropy":
        y = np.asarray(y, dtype=np.int64)
        Y = np.zeros((n, n_classes))
        Y[np.arange(n), y] = w
    elif criterion == "mse":
        Y = np.asarray(y, dtype=np.float64)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")

    feature, threshold, left, right, value, weight, gain = [], [], [], [], [], [], []

    def new_node(rows):
        wn = w[rows]
        tot = wn.sum()
        if criterion == "entropy":
            v = Y[rows].sum(axis=0) / tot
        else:
            v = np.array([np.dot(wn, Y[rows]) / tot])
        for lst, val in ((feature, LEAF), (threshold, 0.0), (left, LEAF), (right, LEAF),
                         (value, v), (weight, tot), (gain, 0.0)):
            lst.append(val)
        return len(feature) - 1

    root_rows = np.nonzero(w > 0)[0]
    stack = [(new_node(root_rows), root_rows, 0)]
    while stack:
        node, rows, depth = stack.pop()
        if max_depth is not None and depth >= max_depth:
            continue
        if rows.size < max(min_samples_split, 2):
            continue
        Yn = Y[rows]
        if criterion == "entropy":
            if np.count_nonzero(Yn.sum(axis=0) > 0) <= 1:
                continue
        elif np.ptp(Yn) == 0:
            continue
        Xn = X[rows]
        nonconst = np.nonzero(Xn.max(axis=0) > Xn.min(axis=0))[0]
        if nonconst.size == 0:
            continue
        cols = nonconst
        if max_features is not None and max_features < nonconst.size:
            node_key = np.uint64(_rng.derive_seed(seed, node))
            keys = _rng.splitmix64_array(name_keys[nonconst] ^ node_key)
            pick = np.lexsort((name_rank[nonconst], keys))[:max_features]
            cols = nonconst[pick]
        split = _best_split(Xn, Yn, w[rows], cols, criterion, name_rank)
        if split is None:
            continue
        g, f, thr = split
        go_left = Xn[:, f] <= thr
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[node], threshold[node], gain[node] = f, thr, g
        left_id = new_node(lrows)
        right_id = new_node(rrows)
        left[node], right[node] = left_id, right_id
        # left subtree is expanded first
        stack.append((right_id, rrows, depth + 1))
        stack.append((left_id, lrows, depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.vstack(value).astype(np.float64),
        weight=np.asarray(weight, dtype=np.float64),
        gain=np.asarray(gain, dtype=np.float64),
    )


def feature_keys(names) -> tuple[np.ndarray, np.ndarray]:
    """(hash key, lexicographic rank) per feature name."""
    names = list(names)
    keys = np.array([_rng.name_key(s) for s in names], dtype=np.uint64)
    rank = np.empty(len(names), dtype=np.int64)
    rank[np.argsort(np.array(names, dtype=object), kind="stable")] = np.arange(len(names))
    return keys, rank
