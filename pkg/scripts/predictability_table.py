"""Print mean prediction accuracy per (rule, predictor, horizon) as a text table.

    python scripts/predictability_table.py [--width 64] [--seeds 30] [--rules 90 110 30]
"""

import argparse

from cilab.predictors import EcaSystem, PredictorSpec, efficiency_sweep

HORIZONS = [1, 4, 16, 64, 256, 512, 1024]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--rules", type=int, nargs="+", default=[90, 110, 30])
    ap.add_argument("--master-seed", type=int, default=7)
    ap.add_argument("--r", type=int, default=256, help="budget of the fixed-budget predictors")
    args = ap.parse_args()
    w = args.width
    preds = [PredictorSpec("frozen", args.r), PredictorSpec("chance-baseline", args.r),
             PredictorSpec("truncated-simulator", args.r),
             PredictorSpec("coarse-simulator", args.r, (("factor", 2),)),
             PredictorSpec("additive-shortcut", w * 11)]
    curves, _ = efficiency_sweep([EcaSystem(r, w) for r in args.rules], preds, HORIZONS, args.seeds,
                                 args.master_seed)
    print(f"{'system':12s} {'predictor':36s}" + "".join(f"{t:>8d}" for t in HORIZONS))
    for c in curves:
        cells = []
        for t in HORIZONS:
            cells.append(f"{'n/a':>8s}" if t in c.inapplicable else f"{c.accuracy_at(t):8.3f}")
        print(f"{c.system_id:12s} {c.predictor_id:36s}" + "".join(cells))


if __name__ == "__main__":
    main()
