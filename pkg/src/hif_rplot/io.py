"""CSV readers and writers for waveforms, event metadata, features and rankings.

Floats are written with ``repr`` so every file round-trips bit-exactly.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from hif_rplot.errors import DataError
from hif_rplot.features import FeatureVector
from hif_rplot.signalgen import EXTERNAL, HIF, PHASES, TYPE1, EventClass, WaveformRecord

WAVEFORM_HEADER = ("event_id", "class", "subtype", "phase", "mode", "load", "sample_index", "value")
EVENT_HEADER = ("event_id", "class", "mode", "load", "sample_rate", "duration", "seed",
                "inception_time", "fault_resistance", "extra")
IMPORTANCE_HEADER = ("rank", "feature", "score")


def _subtype_column(record: WaveformRecord) -> str:
    ec = record.event_class
    if ec.kind == TYPE1:
        return ec.subtype
    if ec.kind == HIF:
        return ec.phase
    if ec.kind == EXTERNAL:
        return str(record.extra.get("fault_type", ""))
    return ""


def _opt(v) -> str:
    return "" if v is None else repr(float(v))


def _parse_opt(v: str):
    return None if v == "" else float(v)


def _open_read(path):
    try:
        return open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _check_header(path, got, want):
    if tuple(got or ())[:len(want)] != tuple(want):
        raise DataError(f"{path}: unexpected header {got!r}")


# -- waveforms ----------------------------------------------------------------

def write_waveforms_csv(records, path) -> None:
    """Long format, one row per (event, phase, sample)."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(WAVEFORM_HEADER) + "\n")
        for rec in records:
            head = f"{rec.event_id},{rec.event_class.kind},{_subtype_column(rec)}"
            for ph, values in zip(PHASES, rec.phases):
                prefix = f"{head},{ph},{rec.mode},{rec.load},"
                fh.write("".join(f"{prefix}{i},{v!r}\n" for i, v in enumerate(values.tolist())))


def write_events_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for rec in records:
            w.writerow([
                rec.event_id, rec.event_class.label, rec.mode, rec.load, repr(float(rec.sample_rate)),
                repr(float(rec.duration)), rec.seed, _opt(rec.inception_time), _opt(rec.fault_resistance),
                json.dumps(rec.extra, sort_keys=True),
            ])


def read_events_csv(path) -> dict[int, dict]:
    out = {}
    with _open_read(path) as fh:
        rows = csv.reader(fh)
        _check_header(path, next(rows, None), EVENT_HEADER)
        for row in rows:
            try:
                eid = int(row[0])
                out[eid] = {
                    "event_class": EventClass.parse(row[1]),
                    "mode": row[2],
                    "load": row[3],
                    "sample_rate": float(row[4]),
                    "duration": float(row[5]),
                    "seed": int(row[6]),
                    "inception_time": _parse_opt(row[7]),
                    "fault_resistance": _parse_opt(row[8]),
                    "extra": json.loads(row[9]) if row[9] else {},
                }
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}: bad event row {row!r}: {exc}") from None
    return out


def read_waveforms_csv(path, events=None) -> list[WaveformRecord]:
    """Rebuild records from waveforms.csv (plus events.csv metadata if given).

    Without ``events`` the sample rate is unknown; it defaults to 10 kHz and
    the duration follows from the sample count.
    """
    samples = defaultdict(lambda: ([], [], []))
    info = {}
    with _open_read(path) as fh:
        rows = csv.reader(fh)
        _check_header(path, next(rows, None), WAVEFORM_HEADER)
        for row in rows:
            try:
                eid = int(row[0])
                k = PHASES.index(row[3])
                samples[eid][k].append((int(row[6]), float(row[7])))
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}: bad waveform row {row!r}: {exc}") from None
            if eid not in info:
                info[eid] = row
    records = []
    for eid in sorted(samples):
        per_phase = []
        for k, pts in enumerate(samples[eid]):
            pts.sort()
            idx = [i for i, _ in pts]
            if idx != list(range(len(idx))):
                raise DataError(f"event {eid} phase {PHASES[k]}: missing or duplicate sample indices")
            per_phase.append([v for _, v in pts])
        if len({len(p) for p in per_phase}) != 1:
            raise DataError(f"event {eid}: phases have different lengths")
        phases = np.array(per_phase)
        row = info[eid]
        if events is not None:
            if eid not in events:
                raise DataError(f"event {eid} missing from the events table")
            meta = dict(events[eid])
        else:
            kind, sub = row[1], row[2]
            label = f"{kind}:{sub}" if kind in (TYPE1, HIF) else kind
            meta = {"event_class": EventClass.parse(label), "mode": row[4], "load": row[5],
                    "sample_rate": 10_000.0, "seed": 0}
            meta["duration"] = phases.shape[1] / meta["sample_rate"]
        try:
            records.append(WaveformRecord(event_id=eid, phases=phases, **meta))
        except ValueError as exc:
            raise DataError(str(exc)) from None
    return records


def read_dataset_dir(directory) -> list[WaveformRecord]:
    d = Path(directory)
    events = read_events_csv(d / "events.csv") if (d / "events.csv").exists() else None
    return read_waveforms_csv(d / "waveforms.csv", events)


# -- features -----------------------------------------------------------------

def write_features_csv(vectors, path) -> None:
    vectors = list(vectors)
    if not vectors:
        raise DataError("no feature vectors to write")
    names = vectors[0].names
    with open(path, "w", newline="") as fh:
        fh.write(",".join(("event_id", "class") + tuple(names)) + "\n")
        for v in vectors:
            if v.names != names:
                raise DataError(f"event {v.event_id}: feature names differ from the first row")
            fh.write(f"{v.event_id},{v.event_class.label}," + ",".join(map(repr, v.values.tolist())) + "\n")


def read_features_csv(path) -> list[FeatureVector]:
    out = []
    with _open_read(path) as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if not header or header[:2] != ["event_id", "class"] or len(header) < 3:
            raise DataError(f"{path}: expected header event_id,class,<features>")
        names = tuple(header[2:])
        for row in rows:
            if len(row) != len(header):
                raise DataError(f"{path}: row has {len(row)} fields, header has {len(header)}")
            try:
                values = np.array([float(x) for x in row[2:]])
                out.append(FeatureVector(int(row[0]), EventClass.parse(row[1]), names, values))
            except ValueError as exc:
                raise DataError(f"{path}: bad feature row for event {row[0]}: {exc}") from None
    return out


# -- importance ---------------------------------------------------------------

def write_importance_csv(items, path) -> None:
    """``items`` is a sequence of (feature, score) in rank order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(IMPORTANCE_HEADER)
        for rank, (name, score) in enumerate(items, start=1):
            w.writerow([rank, name, repr(float(score))])


def read_importance_csv(path) -> list[tuple[str, float]]:
    with _open_read(path) as fh:
        rows = csv.reader(fh)
        _check_header(path, next(rows, None), IMPORTANCE_HEADER)
        try:
            return [(row[1], float(row[2])) for row in rows]
        except (IndexError, ValueError) as exc:
            raise DataError(f"{path}: bad importance row: {exc}") from None
