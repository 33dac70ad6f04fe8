"""Evaluation experiments: exploitability of network and search policies, and
the frontier-error propagation check for depth-limited minimax."""
from __future__ import annotations

import csv
import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .envs.toys import RandomTreeGame
from .exact import DEFAULT_NODE_BUDGET, NodeBudgetExceeded, best_response_value
from .game import GameSpec
from .matgame import solve_lp
from .mcts import Evaluator, SearchConfig, run_search
from .net import NetworkEvaluator, NetworkParams

# ---------------------------------------------------------------------------
# Frontier error propagation
# ---------------------------------------------------------------------------


@dataclass
class ErrorTrialConfig:
    depth: int = 3
    n: int = 2
    m: int = 2
    gamma: float = 0.9
    epsilon: float = 1.0
    reward_range: tuple[float, float] = (-1.0, 1.0)
    trials: int = 200
    draws: int = 32
    seed: int = 0
    node_budget: int = 200_000

    def validate(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if (self.n * self.m) ** self.depth > self.node_budget:
            raise NodeBudgetExceeded(f"tree of {(self.n * self.m) ** self.depth} leaves exceeds the node budget")


@dataclass
class TrialResult:
    max_root_error: float
    bound: float
    passed: bool
    errors: list[float] = field(default_factory=list)


def tree_minimax(rewards: list[np.ndarray], leaf_values: np.ndarray, gamma: float) -> float:
    """Root minimax value of a full tree stored level by level (see ``RandomTreeGame.level_arrays``)."""
    v = np.asarray(leaf_values, dtype=np.float64)
    for R in reversed(rewards):
        k, n, m = R.shape
        Q = R + gamma * v.reshape(k, n, m)
        v = np.array([solve_lp(q).value for q in Q])
    return float(v[0])


def error_propagation_trial(cfg: ErrorTrialConfig) -> TrialResult:
    """Worst root error from i.i.d. uniform frontier noise in ``[-eps, eps]``, against ``gamma**depth * eps``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    bound = cfg.gamma ** cfg.depth * cfg.epsilon
    errors = []
    for trial in range(cfg.trials):
        game = RandomTreeGame(cfg.n, cfg.m, cfg.depth, cfg.gamma, cfg.reward_range,
                              seed=int(rng.integers(2 ** 63)), open_frontier=True)
        R, leaves = game.level_arrays()
        exact = tree_minimax(R, leaves, cfg.gamma)
        worst = 0.0
        for _ in range(cfg.draws):
            noisy = leaves + rng.uniform(-cfg.epsilon, cfg.epsilon, size=leaves.shape)
            worst = max(worst, abs(tree_minimax(R, noisy, cfg.gamma) - exact))
        errors.append(worst)
    max_err = max(errors) if errors else 0.0
    return TrialResult(max_err, bound, max_err <= bound + 1e-12, errors)


# ---------------------------------------------------------------------------
# Policy evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvalRow:
    setting: str
    brv_p1: float
    brv_p2: float
    exploitability: float
    search_iters: int
    seed: int
    method: str


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)

    def aggregate(self) -> list[dict]:
        """Mean and (population) standard deviation over seeds per ``(setting, search_iters)``."""
        groups: dict[tuple, list[EvalRow]] = {}
        for r in self.rows:
            groups.setdefault((r.setting, r.search_iters, r.method), []).append(r)
        out = []
        for (setting, iters, method), rs in groups.items():
            agg = {"setting": setting, "search_iters": iters, "method": method, "seeds": len(rs)}
            for key in ("brv_p1", "brv_p2", "exploitability"):
                vals = np.array([getattr(r, key) for r in rs])
                agg[f"{key}_mean"] = float(vals.mean())
                agg[f"{key}_std"] = float(vals.std())
            out.append(agg)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, [fl for fl in EvalRow.__dataclass_fields__])
            w.writeheader()
            for r in self.rows:
                w.writerow(asdict(r))

    def write_aggregate_csv(self, path) -> None:
        agg = self.aggregate()
        if not agg:
            Path(path).write_text("")
            return
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, list(agg[0]))
            w.writeheader()
            w.writerows(agg)

    def write_json(self, path, config: dict | None = None) -> None:
        Path(path).write_text(json.dumps({"config": config or {}, "rows": [asdict(r) for r in self.rows],
                                          "aggregate": self.aggregate()}, indent=2, sort_keys=True))


def state_seed(seed: int, depth: int, state) -> int:
    """Seed that depends only on ``(seed, depth, state)``, stable across processes."""
    return zlib.crc32(repr((seed, depth, state)).encode())


class SearchPolicyCache:
    """Root strategies of a fresh search per ``(depth, state)``, computed once and shared by both players."""

    def __init__(self, spec: GameSpec, evaluator: Evaluator, cfg: SearchConfig, seed: int):
        self.spec, self.evaluator, self.cfg, self.seed = spec, evaluator, cfg, seed
        self.cache: dict = {}

    def strategies(self, state, depth: int):
        key = (depth, state)
        if key not in self.cache:
            res = run_search(self.spec, state, self.evaluator, self.cfg, rng=state_seed(self.seed, depth, state))
            self.cache[key] = (res.pi1, res.pi2)
        return self.cache[key]

    def player(self, i: int):
        return lambda state, depth: self.strategies(state, depth)[i - 1]


def network_policy(evaluator: Evaluator, spec: GameSpec, player: int):
    def policy(state, depth):
        p1, p2, _ = evaluator.evaluate([state])
        p = (p1 if player == 1 else p2)[0]
        k = spec.action_counts(state)[player - 1]
        return p[:k] / p[:k].sum()
    return policy


def sampled_best_response_value(spec: GameSpec, s0, frozen, responder: int, evaluator: Evaluator,
                                rng: np.random.Generator, episodes: int = 32,
                                lookahead: int = 1, horizon: int | None = None) -> float:
    """Monte Carlo value of a greedy responder; a lower bound on the true best-response value.

    The responder picks the action maximizing a ``lookahead``-step expectimax
    against the frozen mixture, scoring cut-off states with the evaluator's
    value (sign-flipped for player 2). Returns the mean discounted return.
    """
    H = spec.horizon if horizon is None else horizon
    sign = 1.0 if responder == 1 else -1.0

    def q_values(s, d, depth_left):
        n, m = spec.action_counts(s)
        p = frozen(s, d)
        own, other = (n, m) if responder == 1 else (m, n)
        q = np.zeros(own)
        for b in range(own):
            for a in range(other):
                if p[a] <= 0:
                    continue
                j, k = (b, a) if responder == 1 else (a, b)
                r = spec.step(s, j, k)
                q[b] += p[a] * (sign * r.reward1 + spec.gamma * leaf(r.next_state, d + 1, depth_left - 1, r.terminal))
        return q

    def leaf(s, d, depth_left, terminal):
        if terminal or d >= H:
            return 0.0
        if depth_left <= 0:
            return sign * float(evaluator.evaluate([s])[2][0])
        return float(q_values(s, d, depth_left).max())

    total = 0.0
    for _ in range(episodes):
        s, d, ret, disc = s0, 0, 0.0, 1.0
        while not spec.is_terminal(s) and d < H:
            b = int(np.argmax(q_values(s, d, lookahead)))
            p = frozen(s, d)
            a = int(rng.choice(p.shape[0], p=p))
            j, k = (b, a) if responder == 1 else (a, b)
            r = spec.step(s, j, k)
            ret += disc * sign * r.reward1
            disc *= spec.gamma
            s, d = r.next_state, d + 1
        total += ret
    return total / episodes


def exact_feasible(spec: GameSpec, horizon: int, node_budget: int = DEFAULT_NODE_BUDGET) -> bool:
    if spec.tabular:
        return True
    n, m = spec.num_actions
    return horizon <= 6 and n <= 3 and m <= 3 and (n * m) ** horizon <= node_budget


def evaluate_policy_network(spec: GameSpec, net: NetworkParams | Evaluator, n_sim: int = 0,
                            search: SearchConfig | None = None, seed: int = 0, s0=None,
                            method: str = "auto", horizon: int | None = None,
                            node_budget: int = DEFAULT_NODE_BUDGET, episodes: int = 32,
                            setting: str | None = None) -> EvalRow:
    """Best-response values of the raw heads (``n_sim == 0``) or of per-state search policies.

    ``method`` is ``exact`` (expectimax best response), ``sampled`` (Monte Carlo
    lower bound) or ``auto``, which picks exact when the tree is small enough.
    """
    evaluator = NetworkEvaluator(net, spec) if isinstance(net, NetworkParams) else net
    H = spec.horizon if horizon is None else horizon
    s0 = spec.initial_state() if s0 is None else s0
    if method == "auto":
        method = "exact" if exact_feasible(spec, H, node_budget) else "sampled"
    if n_sim > 0:
        cfg = SearchConfig(**{**asdict(search or SearchConfig()), "n_sim": n_sim})
        cache = SearchPolicyCache(spec, evaluator, cfg, seed)
        pi1, pi2 = cache.player(1), cache.player(2)
    else:
        pi1, pi2 = network_policy(evaluator, spec, 1), network_policy(evaluator, spec, 2)
    if method == "exact":
        br2 = best_response_value(spec, s0, pi1, responder=2, horizon=H, node_budget=node_budget)
        br1 = best_response_value(spec, s0, pi2, responder=1, horizon=H, node_budget=node_budget)
    elif method == "sampled":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5A]))
        br2 = sampled_best_response_value(spec, s0, pi1, 2, evaluator, rng, episodes, horizon=H)
        br1 = sampled_best_response_value(spec, s0, pi2, 1, evaluator, rng, episodes, horizon=H)
    else:
        raise ValueError(f"unknown evaluation method {method!r}")
    return EvalRow(setting or spec.name, -br2, -br1, br1 + br2, n_sim, seed, method)


def _eval_job(args):
    spec, net, n_sim, search, seed, kwargs = args
    return evaluate_policy_network(spec, net, n_sim=n_sim, search=search, seed=seed, **kwargs)


def exploitability_vs_search_curve(spec: GameSpec, net, iters_list, seeds=range(8),
                                   search: SearchConfig | None = None, workers: int = 1,
                                   **kwargs) -> EvalReport:
    """One row per ``(n_sim, seed)``; use :meth:`EvalReport.aggregate` for the mean/std curve.

    Rows are independent, so ``workers > 1`` farms them out to processes
    without changing any value.
    """
    jobs = [(spec, net, n_sim, search, seed, kwargs) for n_sim in iters_list for seed in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
            return EvalReport(list(pool.map(_eval_job, jobs)))
    return EvalReport([_eval_job(j) for j in jobs])


def theorem_bound(gamma: float, depth: int, epsilon: float) -> float:
    return gamma ** depth * epsilon

