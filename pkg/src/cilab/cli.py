"""Command line: ``cilab <experiment-id> --config PATH --out DIR --seed U64 [--budget N]``.

``cilab plot-data DIR`` reshapes finished results for plotting. Log
verbosity comes from ``CILAB_LOG`` (DEBUG, INFO, WARNING, ...).
Exit codes: 0 success, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ConfigError
from .experiments import EXPERIMENTS, emit_plot_data, parse_config, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cilab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for exp in EXPERIMENTS:
        s = sub.add_parser(exp, help=f"run the {exp} experiment")
        s.add_argument("--config", required=True)
        s.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        s.add_argument("--seed", type=_u64, default=None, help="master seed (overrides the config)")
        s.add_argument("--budget", type=int, default=None, help="step budget, for experiments that take one")
    s = sub.add_parser("plot-data", help="write plot-ready CSVs for a results directory")
    s.add_argument("results")
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("CILAB_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    log = logging.getLogger("cilab")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "plot-data":
            for path in emit_plot_data(args.results):
                print(path)
            return EXIT_OK
        cfg = parse_config(args.config)
        if cfg.experiment != args.command:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.command!r}",
                              field="experiment", path=args.config)
        manifest = run_experiment(cfg, args.out, args.seed, args.budget)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        log.debug("run failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for name in manifest.outputs:
        print(name)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
