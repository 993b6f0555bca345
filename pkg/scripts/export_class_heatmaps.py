"""Write one recurrence-plot heatmap (PGM) per event class.

Picks the first event of each class from a small generated dataset and
exports the phase-a matrix of its scale-10 CWT series, plus the joint
3-phase matrix.

    python scripts/export_class_heatmaps.py --out runs/heatmaps
"""

import argparse
from pathlib import Path

from hif_rplot.recurrence import RecurrenceTransform, export_heatmap
from hif_rplot.signalgen import CLASS_KINDS, GeneratorConfig, generate_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/heatmaps")
    p.add_argument("--seed", type=int, default=42)
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = GeneratorConfig(master_seed=args.seed).with_counts(type1=5, hif=3, external=5, normal=2)
    records = generate_dataset(cfg)
    per_phase = RecurrenceTransform(combine="concat")
    joint = RecurrenceTransform(combine="joint")
    for kind in CLASS_KINDS:
        rec = next(r for r in records if r.event_class.kind == kind)
        name = rec.event_class.label.replace(":", "_")
        export_heatmap(per_phase.matrices(rec)[0].distances, out / f"{name}_phase_a.pgm")
        export_heatmap(joint.matrices(rec)[0].distances, out / f"{name}_joint.pgm")
        print(f"{kind:<9} event {rec.event_id:>3} ({rec.event_class.label}) -> {out}/{name}_*.pgm")


if __name__ == "__main__":
    main()
