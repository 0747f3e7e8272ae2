"""Command-line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 certificate failure or
a diverged run.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from . import experiments as ex
from .mobility import run_mobility
from .outputs import atomic_write, summary_text

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

log = logging.getLogger("pinswitch")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", type=Path, help="YAML experiment file")
    p.add_argument("--preset", choices=["slow-switching", "mobile-spatial"], default="slow-switching",
                   help="built-in defaults used when --config is absent")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--out", type=Path, help="output directory (overrides config)")
    p.add_argument("--runs", type=int, help="number of runs (overrides config)")


def build_parser():
    ap = _Parser(prog="pinswitch", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, help_ in (
        ("check", "evaluate stabilization certificates and write a summary"),
        ("simulate", "simulate runs and write trajectory CSVs"),
        ("montecarlo", "ensemble mean-square decay statistics"),
        ("mobility", "agent positions and link/pin statistics"),
        ("dump-config", "print the effective configuration as YAML"),
    ):
        _common(sub.add_parser(name, help=help_))
    return ap


def load_config(args):
    if args.config is not None:
        cfg = cfgmod.load(args.config)
    elif args.preset == "mobile-spatial":
        cfg = cfgmod.mobile_spatial_defaults()
    else:
        cfg = cfgmod.slow_switching_defaults()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = str(args.out)
    if args.runs is not None:
        cfg.runs = args.runs
    return cfg.validate()


def cmd_check(cfg):
    sections, ok = ex.report_certificates(cfg)
    path = atomic_write(Path(cfg.out) / "certificates.txt", summary_text(sections))
    print(summary_text(sections), end="")
    log.info("wrote %s", path)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(cfg):
    runner = ex.run_mobile_spatial if cfg.kind == "mobile-spatial" else ex.run_slow_switching
    sections, records = runner(cfg)
    print(summary_text({"ensemble": sections["ensemble"]}), end="")
    return EXIT_FAIL if any(r.diverged for r in records) else EXIT_OK


def cmd_montecarlo(cfg):
    summary, records = ex.montecarlo(cfg, out=cfg.out)
    print(summary_text(summary), end="")
    return EXIT_FAIL if any(r.diverged for r in records) else EXIT_OK


def cmd_mobility(cfg):
    mb = cfg.mobility
    dump = [] if mb.dump_stride else None
    stats = run_mobility(cfg.mobility_config(), mb.stats_horizon, mb.stats_dt, cfg.seed,
                         stride=max(mb.dump_stride, 1), dump=dump)
    sections = {"mobility": dataclasses.asdict(stats)}
    atomic_write(Path(cfg.out) / "mobility.txt", summary_text(sections))
    if dump is not None:
        atomic_write(Path(cfg.out) / "positions.csv", ex.positions_csv(dump))
    print(summary_text(sections), end="")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        if args.cmd == "dump-config":
            print(cfg.dump(), end="")
            return EXIT_OK
        handler = {"check": cmd_check, "simulate": cmd_simulate, "montecarlo": cmd_montecarlo, "mobility": cmd_mobility}
        return handler[args.cmd](cfg)
    except (cfgmod.ConfigError, ValueError) as exc:
        print(f"pinswitch: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
