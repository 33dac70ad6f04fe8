"""``simaz`` command line: train, eval, solve, bench.

Exit codes are 0 on success, 1 for invalid configs or inputs, 2 for runtime
failures (unwritable outputs, exceeded node budgets).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, dump_config, load_config
from .evalx import exploitability_vs_search_curve
from .exact import NodeBudgetExceeded, backward_induction
from .matgame import regret_matching_solve
from .mcts import SearchTree
from .net import CheckpointError, NetworkEvaluator, init_params, load_checkpoint
from .train import net_config_for, train_loop

log = logging.getLogger("simaz")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2


class InputError(Exception):
    pass


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.resolved.yaml")
    return out


def _load_net(path, spec):
    if path is None:
        raise InputError("--checkpoint is required")
    try:
        params = load_checkpoint(path)
    except FileNotFoundError as e:
        raise InputError(f"checkpoint not found: {path}") from e
    except CheckpointError as e:
        raise InputError(f"bad checkpoint {path}: {e}") from e
    c = params.cfg
    if (c.input_size, c.n1, c.n2) != (spec.encoding_size, *spec.num_actions):
        raise InputError(f"checkpoint shape ({c.input_size}, {c.n1}, {c.n2}) does not match "
                         f"env {spec.name} ({spec.encoding_size}, {spec.num_actions[0]}, {spec.num_actions[1]})")
    return params


def cmd_train(cfg: RunConfig, args) -> int:
    spec = cfg.make_env()
    out = _prepare_out(cfg)
    _, history = train_loop(spec, cfg.train, out_dir=out)
    print(f"trained {len(history)} iterations; metrics and checkpoints in {out}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, args) -> int:
    spec = cfg.make_env()
    params = _load_net(args.checkpoint, spec)
    out = _prepare_out(cfg)
    e = cfg.eval
    report = exploitability_vs_search_curve(
        spec, params, e.iters_list, e.seeds, search=cfg.search, workers=cfg.workers,
        method=e.method, horizon=e.horizon, node_budget=e.node_budget, episodes=e.episodes)
    report.write_csv(out / "eval.csv")
    report.write_aggregate_csv(out / "eval_aggregate.csv")
    report.write_json(out / "eval.json", config={**cfg.to_dict(), "checkpoint": str(args.checkpoint)})
    for row in report.aggregate():
        print(f"n_sim {row['search_iters']:>5d}  exploitability {row['exploitability_mean']:.6f}"
              f" +- {row['exploitability_std']:.6f}  ({row['method']})")
    return EXIT_OK


def _fmt(x: float) -> str:
    return f"{round(float(x), 6) + 0.0:.6f}"


def cmd_solve(cfg: RunConfig, args) -> int:
    spec = cfg.make_env()
    if not spec.tabular:
        raise InputError(f"tabular required: {spec.name} has a continuous state")
    out = _prepare_out(cfg)
    s0 = spec.initial_state()
    values, policy = backward_induction(spec, s0, node_budget=cfg.eval.node_budget)
    print(f"value {_fmt(values[(0, s0)])}")
    if (0, s0) in policy.table:
        x, y = policy.table[(0, s0)]
        print("player1 " + " ".join(_fmt(p) for p in x))
        print("player2 " + " ".join(_fmt(p) for p in y))
    dump = {"env": spec.config(), "root_value": values[(0, s0)],
            "root_strategies": {k: v.tolist() for k, v in zip(("player1", "player2"), policy.table.get((0, s0), ()))},
            "values": [{"depth": d, "state": repr(s), "value": v} for (d, s), v in sorted(
                values.items(), key=lambda kv: (kv[0][0], repr(kv[0][1])))]}
    (out / "value_table.json").write_text(json.dumps(dump, indent=2))
    return EXIT_OK


def cmd_bench(cfg: RunConfig, args) -> int:
    spec = cfg.make_env()
    out = _prepare_out(cfg)
    if args.checkpoint is not None:
        params = _load_net(args.checkpoint, spec)
    else:
        params = init_params(net_config_for(spec, cfg.train), np.random.SeedSequence([cfg.seed, 0xBEEF]))
    evaluator = NetworkEvaluator(params, spec)
    ss = np.random.SeedSequence([cfg.seed, 0xBE4C])
    state_rng = np.random.default_rng(ss.spawn(1)[0])
    node_counts, sims, solves = [], 0, 0
    t0 = time.perf_counter()
    for child in ss.spawn(cfg.bench.searches):
        tree = SearchTree(spec, spec.initial_state(state_rng), evaluator, cfg.search, np.random.default_rng(child))
        tree.run()
        node_counts.append(tree.node_count)
        sims += cfg.search.n_sim
        solves += tree.rm_solves
    search_secs = time.perf_counter() - t0

    n, m = spec.num_actions
    mats = np.random.default_rng(ss.spawn(1)[0]).uniform(-1, 1, size=(200, n, m))
    t0 = time.perf_counter()
    for A in mats:
        regret_matching_solve(A, cfg.search.rm_iters)
    rm_secs = time.perf_counter() - t0

    result = {"env": spec.name, "n_sim": cfg.search.n_sim, "rm_iters": cfg.search.rm_iters,
              "searches": cfg.bench.searches, "sims_per_sec": sims / search_secs,
              "rm_solves_per_sec": len(mats) / rm_secs, "search_rm_solves": solves,
              "node_counts": node_counts, "search": asdict(cfg.search)}
    (out / "bench.json").write_text(json.dumps(result, indent=2))
    print(f"sims_per_sec {result['sims_per_sec']:.1f}  rm_solves_per_sec {result['rm_solves_per_sec']:.1f}"
          f"  node_counts {node_counts}")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "solve": cmd_solve, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simaz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML run config")
        p.add_argument("--checkpoint", type=Path, help="network checkpoint (.saz)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="global seed")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry, e.g. search.n_sim=64 (repeatable)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        cfg = load_config(args.config, args.overrides, seed=args.seed, workers=args.workers, out=args.out)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NodeBudgetExceeded as e:
        print(f"error: node budget exceeded: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - any other failure is a runtime error
        log.exception("unexpected failure")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
