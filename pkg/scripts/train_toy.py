#!/usr/bin/env python3
"""Train on a tabular toy and track the raw network's exact exploitability per iteration.

    python scripts/train_toy.py --game "matching_pennies(3)" --iters 8 --out runs/mp3
"""
import argparse
from pathlib import Path

from simaz.envs import make_tabular_toy
from simaz.exact import joint_exploitability, uniform_policy
from simaz.mcts import SearchConfig
from simaz.train import TrainConfig, train_loop


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--game", default="asym22(1)")
    ap.add_argument("--iters", type=int, default=8)
    ap.add_argument("--episodes", type=int, default=8)
    ap.add_argument("--grad-steps", type=int, default=32)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--n-sim", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    game = make_tabular_toy(args.game)
    s0 = game.initial_state()
    base = joint_exploitability(game, s0, uniform_policy(game, 1), uniform_policy(game, 2))
    print(f"{game.name}: uniform pair exploitability {base:.4f}")
    cfg = TrainConfig(n_iter=args.iters, n_ep=args.episodes, grad_steps=args.grad_steps,
                      batch_size=args.batch, seed=args.seed, workers=args.workers,
                      probe_exploitability=True, search=SearchConfig(n_sim=args.n_sim))

    def show(it, params, row):
        print(f"iter {it:>3}  loss {row['total_loss']:.4f}  buffer {row['buffer_fill']:>5}"
              f"  exploitability {row['exploitability']:.4f}")

    train_loop(game, cfg, out_dir=args.out, on_iteration=show)


if __name__ == "__main__":
    main()
