"""Self-play training: MCTS-improved targets, circular replay, minibatch updates."""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exact import best_response_value
from .game import GameSpec, Trajectory, TrajectoryStep
from .mcts import SearchConfig, run_search
from .net import (Batch, NetConfig, NetworkEvaluator, NetworkParams, Optimizer,
                  forward, init_params, loss_grads, save_checkpoint)

log = logging.getLogger(__name__)

METRIC_FIELDS = ["iteration", "wall_seconds", "mean_policy_loss", "mean_value_loss", "total_loss",
                 "buffer_fill", "brv_p1", "brv_p2", "exploitability"]


@dataclass
class ReplayEntry:
    x: np.ndarray
    pi1: np.ndarray
    pi2: np.ndarray
    v1: float

    @property
    def v2(self) -> float:
        return -self.v1


class ReplayBuffer:
    """Fixed-capacity ring buffer; once full every insert evicts the oldest entry."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._data: list = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._data)

    def insert(self, entries) -> None:
        for e in entries:
            if len(self._data) < self.capacity:
                self._data.append(e)
            else:
                self._data[self._cursor] = e
            self._cursor = (self._cursor + 1) % self.capacity

    def entries(self) -> list:
        """Stored entries, oldest first."""
        if len(self._data) < self.capacity:
            return list(self._data)
        return self._data[self._cursor:] + self._data[:self._cursor]

    def sample(self, batch_size: int, rng: np.random.Generator) -> list:
        if not self._data:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, len(self._data), size=batch_size)
        return [self._data[i] for i in idx]


def to_batch(entries: list[ReplayEntry]) -> Batch:
    return Batch(np.stack([e.x for e in entries]), np.stack([e.pi1 for e in entries]),
                 np.stack([e.pi2 for e in entries]), np.array([e.v1 for e in entries]))


def compute_returns(rewards, gamma: float, bootstrap: float = 0.0) -> list[float]:
    """Discounted returns ``v_t = r_t + gamma * v_{t+1}`` with ``v_{T+1} = bootstrap``."""
    out = [0.0] * len(rewards)
    v = bootstrap
    for t in range(len(rewards) - 1, -1, -1):
        v = rewards[t] + gamma * v
        out[t] = v
    return out


@dataclass
class TrainConfig:
    n_iter: int = 50
    n_ep: int = 16
    horizon: int | None = None
    buffer_size: int = 50_000
    batch_size: int = 256
    grad_steps: int = 64
    l2: float = 1e-4
    lr: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    bootstrap_truncated: bool = True
    probe_exploitability: bool = False
    workers: int = 1
    trunk_width: int = 64
    head_width: int = 64
    bins: int = 51
    search: SearchConfig = field(default_factory=SearchConfig)

    def validate(self) -> None:
        for key in ("n_iter", "n_ep", "buffer_size", "batch_size", "grad_steps", "workers",
                    "trunk_width", "head_width"):
            if getattr(self, key) < 1:
                raise ValueError(f"{key} must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        self.search.validate()


def net_config_for(spec: GameSpec, cfg: TrainConfig) -> NetConfig:
    vb = spec.value_bound()
    return NetConfig(spec.encoding_size, *spec.num_actions, v_min=-vb, v_max=vb, bins=cfg.bins,
                     trunk_width=cfg.trunk_width, head_width=cfg.head_width)


def self_play_episode(spec: GameSpec, params: NetworkParams, cfg: TrainConfig,
                      rng: np.random.Generator) -> tuple[list[ReplayEntry], Trajectory]:
    """Play one episode with search at every state; sample both actions from the root strategies."""
    H = cfg.horizon or spec.horizon
    evaluator = NetworkEvaluator(params, spec)
    s = spec.initial_state(rng)
    traj = Trajectory()
    terminal = spec.is_terminal(s)
    while not terminal and len(traj.steps) < H:
        res = run_search(spec, s, evaluator, cfg.search, rng=int(rng.integers(2 ** 63)))
        a1 = int(rng.choice(res.pi1.shape[0], p=res.pi1))
        a2 = int(rng.choice(res.pi2.shape[0], p=res.pi2))
        r = spec.step(s, a1, a2)
        traj.steps.append(TrajectoryStep(s, res.pi1, res.pi2, r.reward1))
        s, terminal = r.next_state, r.terminal
    traj.final_state, traj.terminal = s, terminal
    bootstrap = 0.0
    if not terminal and cfg.bootstrap_truncated:
        bootstrap = float(evaluator.evaluate([s])[2][0])
    gamma = spec.gamma if cfg.search.gamma is None else cfg.search.gamma
    returns = compute_returns(traj.rewards(), gamma, bootstrap)
    entries = [ReplayEntry(spec.encode(st.state), st.pi1, st.pi2, v)
               for st, v in zip(traj.steps, returns)]
    return entries, traj


def _episode_job(args):
    spec, params, cfg, seed = args
    return self_play_episode(spec, params, cfg, np.random.default_rng(seed))[0]


def raw_policy(params: NetworkParams, spec: GameSpec, player: int):
    def policy(state, depth):
        out = forward(params, spec.encode(state))
        p = out.p1 if player == 1 else out.p2
        p = p[: spec.action_counts(state)[player - 1]]
        return p / p.sum()
    return policy


def raw_brv(spec: GameSpec, params: NetworkParams, s0=None) -> tuple[float, float]:
    """Exact guaranteed values ``(brv_p1, brv_p2)`` of the raw network heads."""
    s0 = spec.initial_state() if s0 is None else s0
    br2 = best_response_value(spec, s0, raw_policy(params, spec, 1), responder=2)
    br1 = best_response_value(spec, s0, raw_policy(params, spec, 2), responder=1)
    return -br2, -br1


def train_loop(spec: GameSpec, cfg: TrainConfig, out_dir=None, params: NetworkParams | None = None,
               on_iteration=None) -> tuple[NetworkParams, list[dict]]:
    """Run ``n_iter`` rounds of [``n_ep`` self-play episodes, ``grad_steps`` updates].

    Episodes of one round all read the parameter snapshot taken at its start.
    Per-episode seeds come from ``(seed, iteration, episode)``, so results do
    not depend on ``workers``.
    """
    cfg.validate()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        metrics_path = out / "metrics.csv"
        with open(metrics_path, "w", newline="") as f:
            csv.DictWriter(f, METRIC_FIELDS).writeheader()
    if params is None:
        params = init_params(net_config_for(spec, cfg), np.random.SeedSequence([cfg.seed, 0xBEEF]))
    opt = Optimizer(cfg.optimizer, cfg.lr)
    buffer = ReplayBuffer(cfg.buffer_size)
    train_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xCAFE]))
    history = []
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for it in range(1, cfg.n_iter + 1):
            t0 = time.perf_counter()
            snapshot = params.copy()
            jobs = [(spec, snapshot, cfg, np.random.SeedSequence([cfg.seed, it, ep]))
                    for ep in range(cfg.n_ep)]
            results = pool.map(_episode_job, jobs) if pool else map(_episode_job, jobs)
            for entries in results:
                buffer.insert(entries)

            pol, val, tot = [], [], []
            for _ in range(cfg.grad_steps):
                batch = to_batch(buffer.sample(cfg.batch_size, train_rng))
                parts, grads = loss_grads(params, batch, cfg.l2)
                opt.step(params, grads)
                pol.append(parts.policy)
                val.append(parts.value)
                tot.append(parts.total)

            row = {"iteration": it, "wall_seconds": round(time.perf_counter() - t0, 6),
                   "mean_policy_loss": float(np.mean(pol)), "mean_value_loss": float(np.mean(val)),
                   "total_loss": float(np.mean(tot)), "buffer_fill": len(buffer),
                   "brv_p1": "", "brv_p2": "", "exploitability": ""}
            if cfg.probe_exploitability and spec.tabular:
                b1, b2 = raw_brv(spec, params)
                row.update(brv_p1=b1, brv_p2=b2, exploitability=-(b1 + b2))
            history.append(row)
            log.info("iteration %d: loss %.4f buffer %d", it, row["total_loss"], len(buffer))
            if out is not None:
                with open(metrics_path, "a", newline="") as f:
                    csv.DictWriter(f, METRIC_FIELDS).writerow(row)
                save_checkpoint(params, out / f"ckpt_{it:04d}.saz")
            if on_iteration is not None:
                on_iteration(it, params, row)
    finally:
        if pool is not None:
            pool.shutdown()
    return params, history
