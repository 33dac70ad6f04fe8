#!/usr/bin/env python3
"""Exploitability of search policies as the simulation budget grows.

Trains a network with the smoke protocol (or loads --checkpoint), then
evaluates N_sim in --iters over several seeds and writes per-seed rows and
the mean/std curve.

    python scripts/search_curve.py --game "asym22(2)" --iters 0 8 64 512 --out results/curve
"""
import argparse
from pathlib import Path

from simaz.envs import make_env
from simaz.evalx import exploitability_vs_search_curve
from simaz.mcts import SearchConfig
from simaz.net import load_checkpoint
from simaz.train import TrainConfig, train_loop


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--game", default="asym22(2)")
    ap.add_argument("--checkpoint", type=Path)
    ap.add_argument("--iters", type=int, nargs="+", default=[0, 8, 64, 512])
    ap.add_argument("--seeds", type=int, default=8)
    ap.add_argument("--method", default="auto", choices=["auto", "exact", "sampled"])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/curve"))
    args = ap.parse_args()

    game = make_env(args.game)
    if args.checkpoint:
        params = load_checkpoint(args.checkpoint)
    else:
        cfg = TrainConfig(n_iter=8, n_ep=8, batch_size=64, grad_steps=32, search=SearchConfig(n_sim=32))
        params, _ = train_loop(game, cfg)

    report = exploitability_vs_search_curve(game, params, args.iters, seeds=range(args.seeds),
                                            method=args.method, workers=args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    report.write_csv(args.out / "rows.csv")
    report.write_aggregate_csv(args.out / "curve.csv")
    for row in report.aggregate():
        print(f"N_sim {row['search_iters']:>5}  exploitability {row['exploitability_mean']:.4f}"
              f" +- {row['exploitability_std']:.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
