#!/usr/bin/env python3
"""Regenerate the shipped figure CSVs from the configs/ scenario files.

Usage: python scripts/make_figure_csvs.py [--out-dir data/figures] [--only fig3_forkjoin]
Deterministic: rerunning produces byte-identical CSVs.
"""

import argparse
import sys
import time
from pathlib import Path

from forkbound.engines import warmup_kernels
from forkbound.scenarios import load_scenario, run_scenario, write_csv

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default=str(ROOT / "data" / "figures"))
    parser.add_argument("--config-dir", default=str(ROOT / "configs"))
    parser.add_argument("--only", default=None, help="scenario id substring filter")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    warmup_kernels()

    configs = sorted(Path(args.config_dir).glob("*.json"))
    if args.only:
        configs = [c for c in configs if args.only in c.stem]
    for config in configs:
        scenario = load_scenario(str(config))
        t0 = time.time()
        rows = run_scenario(scenario, workers=args.workers)
        out = out_dir / f"{scenario.id}.csv"
        with open(out, "w") as fh:
            write_csv(rows, fh)
        print(f"{out.name}: {len(rows)} rows in {time.time() - t0:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
