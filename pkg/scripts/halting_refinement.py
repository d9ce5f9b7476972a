"""Halting sweep over all 2-state 2-symbol machines at two budgets; check the second only refines the first.

    python scripts/halting_refinement.py [--low 10000] [--high 100000]
"""

import argparse
import tempfile
from pathlib import Path

import yaml

from cilab.experiments import ExperimentConfig, run_experiment


def sweep(budget, out, previous=None):
    cfg = ExperimentConfig("halting-sweep", {"budget": budget, "n_states": 2, "previous": previous}, seed=0)
    run_experiment(cfg, out)
    return yaml.safe_load((out / "halting_summary.yaml").read_text())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--low", type=int, default=10_000)
    ap.add_argument("--high", type=int, default=100_000)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    root = Path(args.out or tempfile.mkdtemp(prefix="halting-"))
    lo = sweep(args.low, root / f"b{args.low}")
    hi = sweep(args.high, root / f"b{args.high}", str(root / f"b{args.low}" / "halting.csv"))
    print(f"budget {args.low}: reached {lo['reached']}, unknown {lo['unknown']}, "
          f"disagreements with direct runs {lo['disagreements']}")
    print(f"budget {args.high}: reached {hi['reached']}, unknown {hi['unknown']}, "
          f"refined {hi['refined_unknown_to_reached']}, violations {len(hi['refinement_violations'])}")
    print("halting-step histogram:", lo["halting_step_histogram"])
    print("results in", root)


if __name__ == "__main__":
    main()
