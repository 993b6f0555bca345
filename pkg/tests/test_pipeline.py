import numpy as np
import pytest

from hif_rplot import classify
from hif_rplot.errors import ConfigError, DataError
from hif_rplot.features import FeatureVector
from hif_rplot.metrics import compute_metrics
from hif_rplot.pipeline import (
    HIF_OUT, METRICS_HEADER, NOT_INTERNAL, TYPE1_OUT, PipelineConfig, StageTask, cascade_infer, desk_config,
    format_summary, run_pipeline, run_stage, split_dataset, write_metrics_csv,
)
from hif_rplot.signalgen import EventClass

FAST_HP = {"random-forest": {"n_trees": 10}, "gradient-boost": {"n_estimators": 10},
           "adaboost": {"n_estimators": 10}, "mlp": {"epochs": 50}}


def _vectors(per_class=100, labels=("normal", "external", "hif:a", "type1:lg")):
    out = []
    for label in labels:
        for _ in range(per_class):
            out.append(FeatureVector(len(out), EventClass.parse(label), ("x",), np.array([float(len(out))])))
    return out


def test_split_proportions_and_determinism():
    vecs = _vectors()
    train, test = split_dataset(vecs, 0.75, 11)
    for label in ("normal", "external", "hif:a", "type1:lg"):
        assert sum(v.event_class.label == label for v in train) == 75
    again = split_dataset(vecs, 0.75, 11)
    assert [v.event_id for v in again[0]] == [v.event_id for v in train]
    ids_train, ids_test = {v.event_id for v in train}, {v.event_id for v in test}
    assert ids_train | ids_test == {v.event_id for v in vecs} and not ids_train & ids_test
    other = split_dataset(vecs, 0.75, 12)[0]
    assert {v.event_id for v in other} != ids_train


def test_split_rounding_and_errors():
    train, _ = split_dataset(_vectors(per_class=3), 0.75, 0)
    assert len(train) == 4 * 2
    with pytest.raises(DataError):
        split_dataset(_vectors(per_class=1), 0.75, 0)
    with pytest.raises(ConfigError):
        split_dataset(_vectors(), 1.0, 0)


def test_stage_labels():
    s1, s2 = StageTask(1), StageTask(2)
    for sub in ("lg", "llg", "ll", "lllg", "lll"):
        assert s1.label(EventClass("type1", subtype=sub)) == 1
        assert s2.label(EventClass("type1", subtype=sub)) == 0
    assert s1.label(EventClass("hif", phase="b")) == 1 and s2.label(EventClass("hif", phase="b")) == 1
    assert s1.label(EventClass("external")) == 0 and s1.label(EventClass("normal")) == 0
    with pytest.raises(DataError):
        s2.label(EventClass("external"))
    assert len(s2.restrict(_vectors(per_class=2))) == 4
    with pytest.raises(ConfigError):
        StageTask(3)


def _two_stage_models():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]])
    s1 = classify.fit("decision-tree", {}, X, np.array([0, 0, 1, 1, 1, 1]), 0, ("x",))
    s2 = classify.fit("decision-tree", {}, X, np.array([0, 0, 0, 0, 1, 1]), 0, ("x",))
    return s1, s2


def test_cascade_short_circuit_and_outputs():
    s1, s2 = _two_stage_models()
    assert classify.predict_score(s1, [0.0]) == 0.0
    before = s2.n_evaluations
    assert cascade_infer(s1, s2, [0.0]) == NOT_INTERNAL
    assert s2.n_evaluations == before
    assert cascade_infer(s1, s2, [2.0]) == TYPE1_OUT
    assert cascade_infer(s1, s2, [5.0]) == HIF_OUT
    assert s2.n_evaluations == before + 2
    other = classify.fit("knn", {}, np.array([[0.0], [1.0]]), np.array([0, 1]), 0, ("y",))
    with pytest.raises(DataError):
        cascade_infer(s1, other, [1.0])


def test_run_stage_report():
    vecs = _vectors(per_class=20)
    train, test = split_dataset(vecs, 0.75, 3)
    report, model = run_stage(StageTask(1), "knn", {"k": 1}, train, test, 5, "demo")
    assert report.confusion.total == len(test)
    assert report.classifier == "knn" and report.stage == 1 and report.split == "demo"
    assert report.train_time >= 0 and report.test_time >= 0
    assert model.meta["stage"] == 1


def test_unknown_kind_names_the_key():
    with pytest.raises(ConfigError, match="classifiers"):
        PipelineConfig.from_kv({"classifiers": "random-forest, svm"})
    with pytest.raises(ConfigError, match="n_tres"):
        PipelineConfig.from_kv({"random-forest.n_tres": "3"})
    with pytest.raises(ConfigError, match="classifier_input"):
        PipelineConfig.from_kv({"classifier_input": "raw"})


def test_config_round_trip_and_desk_file():
    cfg = desk_config()
    assert PipelineConfig.from_kv(cfg.to_kv()) == cfg
    assert PipelineConfig.from_file("configs/desk.conf") == cfg
    assert cfg.generator.type1.count == 100 and cfg.generator.hif.count == 60
    assert cfg.generator.external.count == 100 and cfg.generator.normal.count == 20
    assert cfg.master_seed == 42 and cfg.split_fraction == 0.75
    assert PipelineConfig().combine == "concat"


def test_metrics_csv_layout(tmp_path):
    r = compute_metrics([0, 1, 1], [0, 1, 0], [0.1, 0.9, 0.4], classifier="knn")
    path = tmp_path / "m.csv"
    write_metrics_csv([r], path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(METRICS_HEADER)
    assert lines[1].startswith("knn,0.666667,")
    write_metrics_csv([r], path, extra_columns=True)
    assert path.read_text().splitlines()[1].endswith(",1,1,0,1")


@pytest.fixture(scope="module")
def small_run(small_config, tmp_path_factory):
    cfg = PipelineConfig(generator=small_config, selection_trees=10, top_k=4, recurrence_length=64, pool=8,
                         hyperparams=FAST_HP)
    out = tmp_path_factory.mktemp("run")
    return run_pipeline(cfg, out), out


def test_small_pipeline_outputs(small_run):
    report, out = small_run
    assert len(report.reports()) == 12
    assert [r.classifier for r in report.stage1] == list(classify.KINDS)
    for name in ("config.resolved", "events.csv", "waveforms.csv", "features.csv", "importance.csv",
                 "rp_features.csv", "metrics_stage1.csv", "metrics_stage2.csv", "summary.txt"):
        assert (out / name).exists(), name
    assert len((out / "metrics_stage1.csv").read_text().splitlines()) == 7
    assert len((out / "importance.csv").read_text().splitlines()) == 5
    n_internal_test = report.stage2[0].confusion.total
    assert report.stage1[0].confusion.total == report.n_test
    assert 0 < n_internal_test < report.n_test
    assert "Classifier" in format_summary(report)


def test_cascade_coherence(small_run):
    report, _ = small_run
    for kind, (acc, confusion) in report.cascade.items():
        assert 0.0 <= acc <= 1.0
        assert sum(sum(row.values()) for row in confusion.values()) == report.n_test
        s1 = next(r for r in report.stage1 if r.classifier == kind)
        not_internal = sum(row.get(NOT_INTERNAL, 0) for row in confusion.values())
        assert not_internal == s1.confusion.n_tn + s1.confusion.n_fn


def test_phase_errors_are_tagged(small_config):
    cfg = PipelineConfig(generator=small_config.with_counts(type1=10, hif=6, external=10, normal=1),
                         selection_trees=5, classifiers=("knn",))
    with pytest.raises(DataError, match=r"\[split\]"):
        run_pipeline(cfg)
