#!/usr/bin/env python3
"""Frontier-error experiment: perturb depth-D leaf values by uniform noise in
[-eps, eps] and compare the worst root error with gamma**D * eps.

    python scripts/error_bound.py --trials 200 --out results/error_bound.csv
"""
import argparse
import csv
import time
from pathlib import Path

from simaz.evalx import ErrorTrialConfig, error_propagation_trial


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depths", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.5, 0.9, 1.0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1, 1.0])
    ap.add_argument("--actions", type=int, nargs=2, default=[2, 2], metavar=("N", "M"))
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--draws", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/error_bound.csv"))
    args = ap.parse_args()

    rows = []
    print(f"{'D':>2} {'gamma':>5} {'eps':>5} {'max err':>9} {'bound':>9} {'ratio':>6}  ok")
    for d in args.depths:
        for g in args.gammas:
            for e in args.eps:
                t0 = time.perf_counter()
                r = error_propagation_trial(ErrorTrialConfig(
                    depth=d, n=args.actions[0], m=args.actions[1], gamma=g, epsilon=e,
                    trials=args.trials, draws=args.draws, seed=args.seed))
                ratio = r.max_root_error / r.bound if r.bound else 0.0
                rows.append({"depth": d, "gamma": g, "epsilon": e, "max_root_error": r.max_root_error,
                             "bound": r.bound, "ratio": ratio, "passed": r.passed,
                             "seconds": time.perf_counter() - t0})
                print(f"{d:>2} {g:>5.2f} {e:>5.2f} {r.max_root_error:>9.5f} {r.bound:>9.5f} {ratio:>6.3f}  {r.passed}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as f:
        w = csv.DictWriter(f, list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
