#!/usr/bin/env python3
"""Five-state slow-switching experiment: trajectories, certificates, ensemble fit.

Writes per-run varsigma CSVs with gnuplot scripts, switching paths and a
summary into the output directory.
"""

import argparse
import sys
from pathlib import Path

from pinswitch import config as cfgmod
from pinswitch import experiments as ex
from pinswitch.outputs import summary_text

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=ROOT / "configs" / "slow_switching.yaml")
    ap.add_argument("--runs", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args(argv)
    cfg = cfgmod.load(args.config)
    for key in ("runs", "seed"):
        if getattr(args, key) is not None:
            setattr(cfg, key, getattr(args, key))
    if args.out is not None:
        cfg.out = str(args.out)
    sections, records = ex.run_slow_switching(cfg.validate())
    print(summary_text({k: sections[k] for k in ("theorem1", "theorem2", "ensemble")}), end="")
    print(f"outputs in {cfg.out}")
    return 2 if any(r.diverged for r in records) else 0


if __name__ == "__main__":
    sys.exit(main())
