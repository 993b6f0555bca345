"""Command line entry point: ``hif-rplot <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from hif_rplot import __version__, classify
from hif_rplot.config import read_kv_file
from hif_rplot.errors import ConfigError, DataError
from hif_rplot.features import (FeatureVector, cwt_coefficients, default_catalog, extract_features, feature_matrix,
                                read_catalog)
from hif_rplot.io import (read_dataset_dir, read_features_csv, read_importance_csv, write_events_csv,
                          write_features_csv, write_importance_csv, write_waveforms_csv)
from hif_rplot.metrics import compute_metrics
from hif_rplot.pipeline import PipelineConfig, StageTask, run_pipeline, write_metrics_csv
from hif_rplot.recurrence import EmbeddingParams, block_average, export_heatmap, recurrence_matrix, write_matrix_csv
from hif_rplot.selection import rank_features, select_top_k
from hif_rplot.signalgen import PHASES, GeneratorConfig, generate_dataset

log = logging.getLogger("hif_rplot")


def _kv_pairs(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _generator_config(args) -> GeneratorConfig:
    kv = read_kv_file(args.config) if args.config else {}
    kv.update(_kv_pairs(args.set))
    cfg = GeneratorConfig.from_kv(kv)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def cmd_generate(args) -> None:
    cfg = _generator_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = generate_dataset(cfg, workers=args.workers)
    write_waveforms_csv(records, out / "waveforms.csv")
    write_events_csv(records, out / "events.csv")
    (out / "generator.conf").write_text("".join(f"{k} = {v}\n" for k, v in cfg.to_kv().items()))
    print(f"wrote {len(records)} events to {out}")


def cmd_extract(args) -> None:
    catalog = read_catalog(args.catalog) if args.catalog else default_catalog()
    records = read_dataset_dir(args.input)
    vectors = [extract_features(r, catalog) for r in records]
    write_features_csv(vectors, args.out)
    print(f"wrote {len(vectors)} x {len(vectors[0]) if vectors else 0} features to {args.out}")


def cmd_select(args) -> None:
    vectors = read_features_csv(args.features)
    X, names = feature_matrix(vectors)
    labels = [v.event_class.kind for v in vectors]
    ranking = rank_features(X, labels, names, n_trees=args.trees, seed=args.seed)
    chosen = select_top_k(ranking, args.k)
    scores = dict(ranking.items())
    write_importance_csv([(n, scores[n]) for n in chosen], args.out)
    for rank, n in enumerate(chosen, 1):
        print(f"{rank:>3}  {n:<24} {scores[n]:.6f}")


def cmd_plot_rp(args) -> None:
    records = {r.event_id: r for r in read_dataset_dir(args.input)}
    if args.event not in records:
        raise DataError(f"event {args.event} not found in {args.input}")
    rec = records[args.event]
    params = EmbeddingParams(args.m, args.tau)
    series = np.stack([block_average(cwt_coefficients(p, args.scale), args.length) for p in rec.phases])
    if args.phase == "joint":
        rm = recurrence_matrix(series.T, params)
    else:
        rm = recurrence_matrix(series[PHASES.index(args.phase)], params)
    export_heatmap(rm.distances, args.out)
    if args.csv:
        write_matrix_csv(rm.distances, args.csv)
    print(f"event {rec.event_id} ({rec.event_class.label}): {rm.size}x{rm.size} matrix -> {args.out}")


def _feature_file(path) -> Path:
    p = Path(path)
    if p.is_dir():
        for name in ("rp_features.csv", "features.csv"):
            if (p / name).exists():
                return p / name
        raise DataError(f"{p} holds neither rp_features.csv nor features.csv")
    return p


def _restrict_columns(vectors, names) -> list:
    have = vectors[0].names
    missing = [n for n in names if n not in have]
    if missing:
        raise DataError(f"features missing from the input: {missing[:5]}")
    idx = [have.index(n) for n in names]
    return [FeatureVector(v.event_id, v.event_class, tuple(names), v.values[idx]) for v in vectors]


def cmd_train(args) -> None:
    task = StageTask(args.stage)
    vectors = task.restrict(read_features_csv(_feature_file(args.input)))
    if not vectors:
        raise DataError("no events left for this stage")
    if args.columns:
        vectors = _restrict_columns(vectors, [n for n, _ in read_importance_csv(args.columns)])
    X, names = feature_matrix(vectors)
    model = classify.fit(args.kind, _kv_pairs(args.param), X, task.labels(vectors), args.seed, names)
    model.meta["stage"] = task.stage
    classify.save_model(model, args.out)
    print(f"trained {args.kind} (stage {task.stage}) on {len(vectors)} events x {len(names)} features -> {args.out}")


def cmd_evaluate(args) -> None:
    model = classify.load_model(args.model)
    task = StageTask(int(model.meta.get("stage", 1)))
    vectors = task.restrict(read_features_csv(_feature_file(args.features)))
    if not vectors:
        raise DataError("no events left for this stage")
    vectors = _restrict_columns(vectors, model.feature_names)
    X, _ = feature_matrix(vectors)
    y = task.labels(vectors)
    scores = classify.predict_scores(model, X)
    report = compute_metrics(y, (scores > 0.5).astype(np.int64), scores, classifier=model.kind,
                             hyperparams=model.hyperparams, seed=model.seed, stage=task.stage)
    write_metrics_csv([report], args.out, extra_columns=True)
    cm = report.confusion
    print(f"stage {task.stage} {model.kind}: accuracy {report.accuracy:.4f}  f1 {report.f1:.4f}  "
          f"roc_auc {report.roc_auc:.4f}  (tp {cm.n_tp}, tn {cm.n_tn}, fp {cm.n_fp}, fn {cm.n_fn})")


def cmd_pipeline(args) -> None:
    kv = read_kv_file(args.config) if args.config else {}
    kv.update(_kv_pairs(args.set))
    cfg = PipelineConfig.from_kv(kv)
    report = run_pipeline(cfg, args.out)
    print((Path(args.out) / "summary.txt").read_text())
    log.info("%d reports written to %s", len(report.reports()), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hif-rplot", description="HIF detection with recurrence-plot features")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesise labelled waveforms")
    g.add_argument("--config", help="key = value generator config")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("extract", help="compute the feature catalog per phase")
    e.add_argument("--in", dest="input", required=True, help="directory with waveforms.csv")
    e.add_argument("--catalog", help="catalog file (default: built-in)")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_extract)

    s = sub.add_parser("select", help="rank features with an entropy random forest")
    s.add_argument("--features", required=True)
    s.add_argument("--top-k", "--k", dest="k", type=int, default=8)
    s.add_argument("--trees", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select)

    r = sub.add_parser("plot-rp", help="export one event's recurrence matrix as PGM")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--event", type=int, required=True)
    r.add_argument("--phase", choices=PHASES + ("joint",), default="a")
    r.add_argument("--scale", type=float, default=10.0)
    r.add_argument("--length", type=int, default=256)
    r.add_argument("--m", type=int, default=1)
    r.add_argument("--tau", type=int, default=1)
    r.add_argument("--csv", help="also write the matrix as CSV")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_plot_rp)

    t = sub.add_parser("train", help="fit one stage classifier")
    t.add_argument("--stage", type=int, choices=(1, 2), required=True)
    t.add_argument("--kind", choices=classify.KINDS, required=True)
    t.add_argument("--in", dest="input", required=True, help="features CSV or a pipeline/extract directory")
    t.add_argument("--columns", help="importance.csv: train on its features only")
    t.add_argument("--param", action="append", metavar="KEY=VALUE", help="hyperparameter")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    v = sub.add_parser("evaluate", help="score a saved model on a features CSV")
    v.add_argument("--model", required=True)
    v.add_argument("--features", required=True)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_evaluate)

    pl = sub.add_parser("pipeline", help="run the full two-stage experiment")
    pl.add_argument("--config", help="key = value pipeline config")
    pl.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
