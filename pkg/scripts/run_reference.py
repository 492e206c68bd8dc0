"""Run the four reference experiments into ./out using the shipped configs.

    python3 scripts/run_reference.py [--seeds N] [--jobs N]
"""

import argparse
import sys
from pathlib import Path

from sealci.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RECIPES = [
    ("seal-run", "seal_run.json"),
    ("noise-sweep", "noise_sweep.json"),
    ("baseline-compare", "baseline_compare.json"),
    ("auit-eval", "auit_eval.json"),
]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    for cmd, cfg in RECIPES:
        argv = [cmd, "--config", str(CONFIGS / cfg), "--out", str(Path(args.out) / cfg[:-5]),
                "--jobs", str(args.jobs), "-v"]
        if args.seeds is not None:
            argv += ["--seeds", str(args.seeds)]
        print(f"== {cmd}", flush=True)
        code = main(argv)
        if code:
            sys.exit(code)
    print((Path(args.out) / "baseline_compare" / "baseline_report.txt").read_text())
