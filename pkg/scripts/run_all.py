"""Run every bundled config into results/<name>/ and write plot data.

    python scripts/run_all.py [--seed N] [--only predict_sweep ...]
"""

import argparse
import time
from pathlib import Path

from cilab.experiments import emit_plot_data, parse_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=None, help="override every config's seed")
    ap.add_argument("--only", nargs="*", default=None)
    ap.add_argument("--out", default=str(ROOT / "results"))
    args = ap.parse_args()
    for cfg_path in sorted((ROOT / "configs").glob("*.yaml")):
        if args.only and cfg_path.stem not in args.only:
            continue
        cfg = parse_config(cfg_path)
        out = Path(args.out) / cfg_path.stem
        t0 = time.perf_counter()
        m = run_experiment(cfg, out, seed=args.seed)
        print(f"{cfg.experiment:18s} {time.perf_counter() - t0:7.1f}s  {out}  ({len(m.outputs)} files)")
        try:
            emit_plot_data(out)
        except Exception:
            pass  # nothing plottable for this experiment


if __name__ == "__main__":
    main()
