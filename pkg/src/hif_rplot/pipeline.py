"""Two-stage cascade: split, per-stage training and evaluation, reports.

Stage 1 separates internal faults (Type-1 and HIF) from external faults and
normal operation.  Stage 2 separates HIF from Type-1 and only ever sees
internal events; it is trained on ground-truth internal events.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from hif_rplot import _rng, classify
from hif_rplot.classify import KINDS, SHORT_NAMES, TREE_KINDS, TrainedStageModel, resolve_hyperparams
from hif_rplot.config import as_bool, as_float, as_int, as_str_list, format_value, read_kv_file
from hif_rplot.errors import ConfigError, DataError
from hif_rplot.features import FeatureVector, default_catalog, extract_features, feature_matrix, read_catalog
from hif_rplot.io import (write_events_csv, write_features_csv, write_importance_csv,
                          write_waveforms_csv)
from hif_rplot.metrics import MetricsReport, compute_metrics
from hif_rplot.recurrence import EmbeddingParams, RecurrenceTransform
from hif_rplot.selection import ImportanceRanking, rank_features, select_top_k
from hif_rplot.signalgen import HIF, GeneratorConfig, generate_dataset

log = logging.getLogger(__name__)

NOT_INTERNAL = "not-internal"
TYPE1_OUT = "type1"
HIF_OUT = "hif"

METRICS_HEADER = ("classifier", "accuracy", "precision", "recall", "f1", "roc_auc", "train_s", "test_s")


@dataclass(frozen=True)
class StageTask:
    stage: int

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ConfigError(f"stage must be 1 or 2, got {self.stage!r}")

    @property
    def description(self) -> str:
        if self.stage == 1:
            return "internal fault detection (Type-1 + HIF vs external + normal)"
        return "HIF identification (HIF vs Type-1, internal events only)"

    def accepts(self, event_class) -> bool:
        return self.stage == 1 or event_class.is_internal

    def label(self, event_class) -> int:
        if self.stage == 1:
            return int(event_class.is_internal)
        if not event_class.is_internal:
            raise DataError(f"stage 2 received a {event_class.kind} event")
        return int(event_class.kind == HIF)

    def labels(self, vectors) -> np.ndarray:
        return np.array([self.label(v.event_class) for v in vectors], dtype=np.int64)

    def restrict(self, vectors) -> list:
        return [v for v in vectors if self.accepts(v.event_class)]


# -- split ----------------------------------------------------------------------

def split_dataset(vectors, fraction: float, seed: int) -> tuple[list, list]:
    """Stratified split by event class (label incl. subtype/phase).

    Each stratum of ``n`` events puts ``round(fraction * n)`` (clamped to
    ``1 .. n-1``) into train, chosen by a seeded shuffle.  Both outputs keep
    the input order.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"split fraction must lie in (0, 1), got {fraction}")
    vectors = list(vectors)
    strata: dict[str, list[int]] = {}
    for i, v in enumerate(vectors):
        strata.setdefault(v.event_class.label, []).append(i)
    in_train = np.zeros(len(vectors), dtype=bool)
    for k, label in enumerate(sorted(strata)):
        idx = strata[label]
        n = len(idx)
        if n < 2:
            raise DataError(f"class {label!r} has {n} event(s); a split needs at least 2")
        n_train = min(max(int(math.floor(fraction * n + 0.5)), 1), n - 1)
        perm = _rng.stream(seed, k).permutation(n)
        in_train[np.asarray(idx)[perm[:n_train]]] = True
    train = [v for v, t in zip(vectors, in_train) if t]
    test = [v for v, t in zip(vectors, in_train) if not t]
    return train, test


# -- stages ---------------------------------------------------------------------

def run_stage(task: StageTask, kind: str, hyperparams, train, test, seed: int,
              split: str = "") -> tuple[MetricsReport, TrainedStageModel]:
    y_train = task.labels(train)
    y_test = task.labels(test)
    X_train, names = feature_matrix(train)
    X_test, test_names = feature_matrix(test)
    if test_names != names:
        raise DataError("train and test feature orderings differ")
    t0 = time.perf_counter()
    model = classify.fit(kind, hyperparams, X_train, y_train, seed, names)
    t1 = time.perf_counter()
    scores = classify.predict_scores(model, X_test)
    pred = (scores > 0.5).astype(np.int64)
    t2 = time.perf_counter()
    model.meta["stage"] = task.stage
    report = compute_metrics(
        y_test, pred, scores, train_time=t1 - t0, test_time=t2 - t1, classifier=kind,
        hyperparams=dict(model.hyperparams), seed=seed, split=split, stage=task.stage,
    )
    return report, model


def cascade_infer(stage1: TrainedStageModel, stage2: TrainedStageModel, features) -> str:
    """``not-internal``, ``type1`` or ``hif``; stage 2 runs only on stage-1 positives."""
    if tuple(stage1.feature_names) != tuple(stage2.feature_names):
        raise DataError("stage-1 and stage-2 models use different feature orderings")
    if not classify.predict(stage1, features):
        return NOT_INTERNAL
    return HIF_OUT if classify.predict(stage2, features) else TYPE1_OUT


def _truth(event_class) -> str:
    if not event_class.is_internal:
        return NOT_INTERNAL
    return HIF_OUT if event_class.kind == HIF else TYPE1_OUT


# -- configuration ----------------------------------------------------------------

_PIPELINE_KEYS = {
    "catalog", "split.fraction", "selection.n_trees", "selection.top_k", "recurrence.scale",
    "recurrence.length", "recurrence.m", "recurrence.tau", "recurrence.pool", "recurrence.combine",
    "classifier_input", "classifiers", "workers", "write_waveforms",
}
INPUTS = ("recurrence", "selected")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one experiment needs; every seed derives from the generator's master seed.

    ``recurrence_scale = None`` takes the scale of the best-ranked CWT feature
    among the selected ones (10 if none was selected).
    """

    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    catalog: Optional[str] = None
    split_fraction: float = 0.75
    selection_trees: int = 100
    top_k: int = 8
    recurrence_scale: Optional[float] = None
    recurrence_length: int = 256
    embedding: EmbeddingParams = EmbeddingParams()
    pool: int = 16
    combine: str = "concat"
    classifier_input: str = "recurrence"
    classifiers: tuple = KINDS
    hyperparams: dict = field(default_factory=dict)
    workers: int = 1
    write_waveforms: bool = True

    def __post_init__(self):
        if self.classifier_input not in INPUTS:
            raise ConfigError(f"classifier_input: expected one of {INPUTS}, got {self.classifier_input!r}")
        for kind in self.classifiers:
            if kind not in KINDS:
                raise ConfigError(f"classifiers: unknown classifier kind {kind!r}")
        if not self.classifiers:
            raise ConfigError("classifiers: empty list")
        # store fully resolved hyperparameters so equal experiments compare equal
        kinds = list(self.classifiers) + [k for k in self.hyperparams if k not in self.classifiers]
        object.__setattr__(self, "hyperparams",
                           {k: resolve_hyperparams(k, self.hyperparams.get(k)) for k in kinds})
        if self.catalog == "":
            object.__setattr__(self, "catalog", None)
        if self.top_k < 1 or self.selection_trees < 1:
            raise ConfigError("selection.top_k and selection.n_trees must be >= 1")

    @property
    def master_seed(self) -> int:
        return self.generator.master_seed

    def seed_for(self, *path: int) -> int:
        return _rng.derive_seed(self.master_seed, *path)

    def transform(self, scale: float) -> RecurrenceTransform:
        return RecurrenceTransform(scale=scale, length=self.recurrence_length, params=self.embedding,
                                   pool=self.pool, combine=self.combine)

    def load_catalog(self):
        return read_catalog(self.catalog) if self.catalog else default_catalog()

    @classmethod
    def from_kv(cls, kv: dict) -> "PipelineConfig":
        gen_kv = {}
        own = {}
        hyper: dict[str, dict] = {}
        for key, value in kv.items():
            head, _, rest = key.partition(".")
            if key in _PIPELINE_KEYS:
                own[key] = value
            elif head in KINDS and rest:
                hyper.setdefault(head, {})[rest] = value
            else:
                gen_kv[key] = value
        args = {"generator": GeneratorConfig.from_kv(gen_kv)}
        if "catalog" in own:
            args["catalog"] = own["catalog"]
        if "split.fraction" in own:
            args["split_fraction"] = as_float("split.fraction", own["split.fraction"])
        if "selection.n_trees" in own:
            args["selection_trees"] = as_int("selection.n_trees", own["selection.n_trees"])
        if "selection.top_k" in own:
            args["top_k"] = as_int("selection.top_k", own["selection.top_k"])
        if "recurrence.scale" in own:
            v = own["recurrence.scale"]
            args["recurrence_scale"] = None if v.lower() == "auto" else as_float("recurrence.scale", v)
        for key, name in (("recurrence.length", "recurrence_length"), ("recurrence.pool", "pool"),
                          ("workers", "workers")):
            if key in own:
                args[name] = as_int(key, own[key])
        if "recurrence.m" in own or "recurrence.tau" in own:
            try:
                args["embedding"] = EmbeddingParams(as_int("recurrence.m", own.get("recurrence.m", "1")),
                                                    as_int("recurrence.tau", own.get("recurrence.tau", "1")))
            except ValueError as exc:
                raise ConfigError(f"recurrence.m/recurrence.tau: {exc}") from None
        if "recurrence.combine" in own:
            args["combine"] = own["recurrence.combine"]
        if "classifier_input" in own:
            args["classifier_input"] = own["classifier_input"]
        if "classifiers" in own:
            args["classifiers"] = tuple(as_str_list("classifiers", own["classifiers"]))
        if "write_waveforms" in own:
            args["write_waveforms"] = as_bool("write_waveforms", own["write_waveforms"])
        args["hyperparams"] = hyper
        return cls(**args)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        return cls.from_kv(read_kv_file(path))

    def to_kv(self) -> dict[str, str]:
        out = self.generator.to_kv()
        out.update({
            "catalog": self.catalog or "",
            "split.fraction": format_value(self.split_fraction),
            "selection.n_trees": format_value(self.selection_trees),
            "selection.top_k": format_value(self.top_k),
            "recurrence.scale": "auto" if self.recurrence_scale is None else format_value(self.recurrence_scale),
            "recurrence.length": format_value(self.recurrence_length),
            "recurrence.m": format_value(self.embedding.m),
            "recurrence.tau": format_value(self.embedding.tau),
            "recurrence.pool": format_value(self.pool),
            "recurrence.combine": self.combine,
            "classifier_input": self.classifier_input,
            "classifiers": ", ".join(self.classifiers),
            "workers": format_value(self.workers),
            "write_waveforms": format_value(self.write_waveforms),
        })
        for kind in self.classifiers:
            for k, v in resolve_hyperparams(kind, self.hyperparams.get(kind)).items():
                out[f"{kind}.{k}"] = "none" if v is None else format_value(v)
        return out


def desk_config(**changes) -> PipelineConfig:
    """Laptop-sized experiment: 100 Type-1, 60 HIF, 100 External, 20 Normal, seed 42.

    Same settings as ``configs/desk.conf``; uses the joint 3-phase recurrence matrix.
    """
    gen = replace(GeneratorConfig(), master_seed=42).with_counts(type1=100, hif=60, external=100, normal=20)
    base = PipelineConfig(generator=gen, recurrence_scale=10.0, combine="joint")
    return replace(base, **changes)


# -- driver -------------------------------------------------------------------------

@dataclass
class ExperimentReport:
    config: PipelineConfig
    stage1: list
    stage2: list
    ranking: ImportanceRanking
    selected: list
    recurrence_scale: float
    cascade: dict  # kind -> (accuracy, confusion {truth: {pred: count}})
    n_train: int
    n_test: int
    timings: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict, repr=False)

    def reports(self):
        return self.stage1 + self.stage2


class _Phase:
    """Times a pipeline phase and tags errors raised inside it with its name."""

    def __init__(self, name: str, timings: dict):
        self.name = name
        self.timings = timings

    def __enter__(self):
        log.info("phase %s ...", self.name)
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and isinstance(exc, (ConfigError, DataError)):
            raise type(exc)(f"[{self.name}] {exc}") from exc
        log.info("phase %s done in %.2f s", self.name, self.timings[self.name])
        return False


def _auto_scale(selected, catalog) -> float:
    by_name = {s.name: s for s in catalog}
    for name in selected:
        spec = by_name.get(name.partition("_")[2])
        if spec is not None and spec.family == "time-frequency":
            return float(spec.resolved_params()["scale"])
    return 10.0


def _columns(vectors, names) -> list:
    idx = [vectors[0].names.index(n) for n in names]
    return [FeatureVector(v.event_id, v.event_class, tuple(names), v.values[idx]) for v in vectors]


def run_pipeline(config: PipelineConfig, out_dir=None) -> ExperimentReport:
    """generate -> extract -> select -> recurrence -> stage 1 / stage 2 for every kind."""
    timings: dict[str, float] = {}
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.resolved").write_text(
            "".join(f"{k} = {v}\n" for k, v in config.to_kv().items()))

    with _Phase("generate", timings):
        records = generate_dataset(config.generator, workers=config.workers)
        if out is not None:
            write_events_csv(records, out / "events.csv")
            if config.write_waveforms:
                write_waveforms_csv(records, out / "waveforms.csv")

    with _Phase("extract", timings):
        catalog = config.load_catalog()
        vectors = [extract_features(r, catalog) for r in records]
        if out is not None:
            write_features_csv(vectors, out / "features.csv")

    with _Phase("split", timings):
        split_seed = config.seed_for(1)
        train, test = split_dataset(vectors, config.split_fraction, split_seed)
        train_ids = {v.event_id for v in train}
        split_desc = f"stratified {config.split_fraction:g}/{1 - config.split_fraction:g} seed={split_seed}"

    with _Phase("select", timings):
        X, names = feature_matrix(train)
        ranking = rank_features(X, [v.event_class.kind for v in train], names,
                                n_trees=config.selection_trees, seed=config.seed_for(2))
        selected = select_top_k(ranking, min(config.top_k, len(ranking)))
        if out is not None:
            write_importance_csv([(n, dict(ranking.items())[n]) for n in selected], out / "importance.csv")

    with _Phase("recurrence", timings):
        scale = config.recurrence_scale if config.recurrence_scale is not None else _auto_scale(selected, catalog)
        if config.classifier_input == "recurrence":
            transform = config.transform(scale)
            inputs = [transform.transform(r) for r in records]
            if out is not None:
                write_features_csv(inputs, out / "rp_features.csv")
        else:
            inputs = _columns(vectors, selected)
        train_in = [v for v in inputs if v.event_id in train_ids]
        test_in = [v for v in inputs if v.event_id not in train_ids]

    stage_reports = {1: [], 2: []}
    models = {}
    for stage in (1, 2):
        task = StageTask(stage)
        tr, te = task.restrict(train_in), task.restrict(test_in)
        with _Phase(f"stage{stage}", timings):
            for kind in config.classifiers:
                seed = config.seed_for(3, stage, KINDS.index(kind))
                report, model = run_stage(task, kind, config.hyperparams.get(kind), tr, te, seed, split_desc)
                stage_reports[stage].append(report)
                models[(stage, kind)] = model
                log.info("stage %d %-15s accuracy %.4f", stage, kind, report.accuracy)

    with _Phase("cascade", timings):
        cascade = {}
        for kind in config.classifiers:
            confusion: dict[str, dict[str, int]] = {}
            hits = 0
            for v in test_in:
                truth = _truth(v.event_class)
                pred = cascade_infer(models[(1, kind)], models[(2, kind)], v)
                confusion.setdefault(truth, {}).setdefault(pred, 0)
                confusion[truth][pred] += 1
                hits += truth == pred
            cascade[kind] = (hits / len(test_in), confusion)

    report = ExperimentReport(
        config=config, stage1=stage_reports[1], stage2=stage_reports[2], ranking=ranking,
        selected=selected, recurrence_scale=scale, cascade=cascade, n_train=len(train),
        n_test=len(test), timings=timings, models=models,
    )
    if out is not None:
        write_metrics_csv(report.stage1, out / "metrics_stage1.csv")
        write_metrics_csv(report.stage2, out / "metrics_stage2.csv")
        (out / "summary.txt").write_text(format_summary(report))
    return report


# -- reports --------------------------------------------------------------------------

def _metrics_row(r: MetricsReport) -> list[str]:
    vals = (r.accuracy, r.precision, r.recall, r.f1, r.roc_auc, r.train_time, r.test_time)
    return [r.classifier] + [f"{v:.6f}" for v in vals]


def write_metrics_csv(reports, path, extra_columns: bool = False) -> None:
    """One row per report; ``extra_columns`` appends the confusion counts."""
    header = list(METRICS_HEADER)
    if extra_columns:
        header += ["n_tp", "n_tn", "n_fp", "n_fn"]
    lines = [",".join(header)]
    for r in reports:
        row = _metrics_row(r)
        if extra_columns:
            cm = r.confusion
            row += [str(cm.n_tp), str(cm.n_tn), str(cm.n_fp), str(cm.n_fn)]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _table(title: str, reports) -> list[str]:
    ranked = sorted(reports, key=lambda r: (-r.accuracy, KINDS.index(r.classifier)))
    lines = [title, ""]
    lines.append(f"{'Classifier':<11}{'Accuracy':>10}{'Precision':>11}{'Recall':>9}{'F1-Score':>10}"
                 f"{'ROC-AUC':>9}{'Train Time (s)':>16}{'Test Time (s)':>15}")
    for r in ranked:
        lines.append(f"{SHORT_NAMES[r.classifier]:<11}{r.accuracy:>10.4f}{r.precision:>11.4f}{r.recall:>9.4f}"
                     f"{r.f1:>10.4f}{r.roc_auc:>9.4f}{r.train_time:>16.4f}{r.test_time:>15.4f}")
    return lines + [""]


def format_summary(report: ExperimentReport) -> str:
    cfg = report.config
    gen = cfg.generator
    lines = [
        "HIF detection with recurrence-plot features",
        "",
        f"events: {gen.type1.count} type1, {gen.hif.count} hif, {gen.external.count} external, "
        f"{gen.normal.count} normal (master seed {gen.master_seed})",
        f"split: {report.stage1[0].split}; {report.n_train} train / {report.n_test} test events",
        f"selected features (top {len(report.selected)}): {', '.join(report.selected)}",
        f"classifier input: {cfg.classifier_input}"
        + (f" (CWT scale {report.recurrence_scale:g}, length {cfg.recurrence_length}, m={cfg.embedding.m}, "
           f"tau={cfg.embedding.tau}, pooled {cfg.pool}x{cfg.pool}, {cfg.combine})"
           if cfg.classifier_input == "recurrence" else ""),
        "",
    ]
    lines += _table("Stage 1: " + StageTask(1).description, report.stage1)
    lines += _table("Stage 2: " + StageTask(2).description, report.stage2)
    lines += ["Cascade on the test events (3-way: not-internal / type1 / hif)", ""]
    for kind in sorted(report.cascade, key=lambda k: (-report.cascade[k][0], KINDS.index(k))):
        acc, confusion = report.cascade[kind]
        lines.append(f"{SHORT_NAMES[kind]:<11}{acc:>10.4f}")
    trees = [r for r in report.stage2 if r.classifier in TREE_KINDS]
    mlp = [r for r in report.stage2 if r.classifier == "mlp"]
    if trees and mlp:
        beat = all(r.accuracy > mlp[0].accuracy for r in trees)
        lines += ["", f"stage 2: every tree-based kind above MLP: {'yes' if beat else 'no'}"]
    lines += ["", "phase timings (s): " + ", ".join(f"{k} {v:.2f}" for k, v in report.timings.items()), ""]
    return "\n".join(lines)
