import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hif_rplot._rng import stream
from hif_rplot.errors import DataError
from hif_rplot.metrics import ConfusionMatrix, compute_metrics, roc_auc, roc_curve


def pairwise_auc(y, s):
    pos = [v for v, t in zip(s, y) if t == 1]
    neg = [v for v, t in zip(s, y) if t == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_confusion_example():
    y = [1] * 10 + [0] * 10
    p = [1] * 9 + [0] + [0] * 9 + [1]
    r = compute_metrics(y, p, p)
    assert r.confusion == ConfusionMatrix(9, 9, 1, 1)
    assert r.accuracy == 0.9
    assert r.precision == pytest.approx(0.9, abs=1e-12)
    assert r.recall == pytest.approx(0.9, abs=1e-12)
    assert r.f1 == pytest.approx(0.9, abs=1e-12)


def test_perfect_predictions():
    y = [0, 1, 1, 0, 1]
    r = compute_metrics(y, y, y)
    assert r.accuracy == r.precision == r.recall == r.f1 == r.roc_auc == 1.0


def test_auc_examples():
    assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
    assert roc_auc([0, 1, 0, 1], [0.3] * 4) == 0.5
    assert roc_auc([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == 0.75
    with pytest.raises(DataError):
        roc_auc([1, 1], [0.2, 0.3])


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 500), levels=st.integers(1, 20))
def test_auc_matches_pairwise_statistic(seed, n, levels):
    rng = stream(seed, 0)
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1
    s = rng.integers(0, levels, size=n) / levels
    assert abs(roc_auc(y, s) - pairwise_auc(y.tolist(), s.tolist())) <= 1e-12


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 200))
def test_roc_curve_monotone_and_anchored(seed, n):
    rng = stream(seed, 1)
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1
    pts = roc_curve(y, rng.integers(0, 7, size=n))
    assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
    fpr, tpr = np.array(pts).T
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 300))
def test_report_identities(seed, n):
    rng = stream(seed, 2)
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1
    s = rng.uniform(size=n)
    p = (s > 0.5).astype(int)
    r = compute_metrics(y, p, s)
    cm = r.confusion
    assert cm.total == n
    assert abs(r.accuracy - (cm.n_tp + cm.n_tn) / n) <= 1e-12
    assert abs(r.recall - r.accuracy) <= 1e-12
    for c in r.per_class.values():
        if c.precision + c.recall > 0:
            assert abs(c.f1 - 2 * c.precision * c.recall / (c.precision + c.recall)) <= 1e-12
        else:
            assert c.f1 == 0.0
    assert r.per_class[1].support + r.per_class[0].support == n


def test_metric_errors():
    with pytest.raises(DataError):
        compute_metrics([0, 1], [0], [0.1, 0.2])
    with pytest.raises(DataError):
        compute_metrics([], [], [])
    with pytest.raises(DataError):
        compute_metrics([1, 1, 1], [1, 0, 1], [0.9, 0.1, 0.8])


def test_report_carries_info():
    r = compute_metrics([0, 1], [0, 1], [0.2, 0.7], classifier="knn", seed=3, stage=1, split="0.75")
    assert (r.classifier, r.seed, r.stage, r.split) == ("knn", 3, 1, "0.75")
