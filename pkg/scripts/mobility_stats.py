#!/usr/bin/env python3
"""Long-run pinned-time fraction and link frequency of the random-waypoint agents."""

import argparse

import numpy as np

from pinswitch.mobility import MobilityConfig, run_mobility


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=float, default=1000.0)
    ap.add_argument("--dt", type=float, default=1e-2)
    ap.add_argument("--seeds", type=int, nargs="+", default=[7])
    args = ap.parse_args(argv)
    cfg = MobilityConfig()
    uniform = np.pi * cfg.r_link**2 / cfg.width**2
    print(f"uniform-density link probability: {uniform:.5f}")
    for seed in args.seeds:
        s = run_mobility(cfg, args.horizon, args.dt, seed)
        print(f"seed {seed}: pinned fraction {s.pin_fraction:.4f}, link frequency {s.link_frequency:.5f} "
              f"({(s.link_frequency / uniform - 1) * 100:+.1f}% vs uniform)")


if __name__ == "__main__":
    main()
