"""Run the desk-scale two-stage experiment and print the summary tables.

    python scripts/run_desk.py --out runs/desk
    python scripts/run_desk.py --config configs/full.conf --out runs/full
"""

import argparse
import logging
from pathlib import Path

from hif_rplot.pipeline import PipelineConfig, desk_config, run_pipeline


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", help="pipeline config (default: the built-in desk config)")
    p.add_argument("--out", default="runs/desk")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = PipelineConfig.from_file(args.config) if args.config else desk_config()
    run_pipeline(cfg, args.out)
    print((Path(args.out) / "summary.txt").read_text())


if __name__ == "__main__":
    main()
