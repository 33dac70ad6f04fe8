"""Exact solvers for small games: backward induction, best responses, exploitability.

Policies passed around here are callables ``policy(state, depth) -> probs``.
Depth is measured from the state the computation starts at.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .game import GameSpec
from .matgame import solve_lp

Policy = Callable[[Any, int], np.ndarray]

DEFAULT_NODE_BUDGET = 1_000_000


class NodeBudgetExceeded(RuntimeError):
    pass


@dataclass
class StagePolicy:
    """Equilibrium stage strategies keyed by ``(depth, state)``."""

    table: dict[tuple[int, Any], tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def player(self, i: int) -> Policy:
        idx = 0 if i == 1 else 1

        def policy(state, depth: int) -> np.ndarray:
            return self.table[(depth, state)][idx]
        return policy


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self) -> None:
        self.used += 1
        if self.used > self.limit:
            raise NodeBudgetExceeded(f"exceeded node budget of {self.limit}")


def backward_induction(spec: GameSpec, s0, horizon: int | None = None,
                       frontier: Callable[[Any], float] | None = None,
                       node_budget: int = DEFAULT_NODE_BUDGET) -> tuple[dict, StagePolicy]:
    """Minimax values of every reachable ``(depth, state)`` via exact stage LPs.

    Nodes at ``horizon`` take ``frontier(state)`` (0 by default) and terminal
    states take 0. Returns ``(values, stage_policy)``.
    """
    H = spec.horizon if horizon is None else horizon
    values: dict[tuple[int, Any], float] = {}
    policy = StagePolicy()
    budget = _Budget(node_budget)
    memo = spec.tabular

    def solve(d: int, s) -> float:
        key = (d, s)
        if memo and key in values:
            return values[key]
        budget.spend()
        if spec.is_terminal(s):
            v = 0.0
        elif d >= H:
            v = 0.0 if frontier is None else float(frontier(s))
        else:
            n, m = spec.action_counts(s)
            A = np.empty((n, m))
            for j in range(n):
                for k in range(m):
                    r = spec.step(s, j, k)
                    A[j, k] = r.reward1 + spec.gamma * solve(d + 1, r.next_state)
            sol = solve_lp(A)
            policy.table[key] = (sol.row_strategy, sol.col_strategy)
            v = sol.value
        values[key] = v
        return v

    solve(0, s0)
    return values, policy


def best_response_value(spec: GameSpec, s0, frozen: Policy, responder: int,
                        horizon: int | None = None,
                        node_budget: int = DEFAULT_NODE_BUDGET) -> float:
    """Responder's optimal value against a frozen stochastic policy.

    Depth-limited expectimax: expectation over the frozen player's mixture,
    maximization over the responder's actions (ties go to the lowest index).
    The value is from the responder's own perspective.
    """
    if responder not in (1, 2):
        raise ValueError("responder must be 1 or 2")
    H = spec.horizon if horizon is None else horizon
    sign = 1.0 if responder == 1 else -1.0
    memo: dict = {}
    budget = _Budget(node_budget)

    def value(d: int, s) -> float:
        if spec.is_terminal(s) or d >= H:
            return 0.0
        key = (d, s)
        if spec.tabular and key in memo:
            return memo[key]
        budget.spend()
        n, m = spec.action_counts(s)
        p = np.asarray(frozen(s, d), dtype=np.float64)
        own, other = (n, m) if responder == 1 else (m, n)
        best = -np.inf
        for b in range(own):
            q = 0.0
            for a in range(other):
                if p[a] <= 0.0:
                    continue
                j, k = (b, a) if responder == 1 else (a, b)
                r = spec.step(s, j, k)
                q += p[a] * (sign * r.reward1 + spec.gamma * value(d + 1, r.next_state))
            if q > best:
                best = q
        if spec.tabular:
            memo[key] = best
        return best

    return float(value(0, s0))


def joint_exploitability(spec: GameSpec, s0, pi1: Policy, pi2: Policy,
                         horizon: int | None = None,
                         node_budget: int = DEFAULT_NODE_BUDGET) -> float:
    """Sum of both best-response values; zero exactly at equilibrium."""
    brv2 = best_response_value(spec, s0, pi1, responder=2, horizon=horizon, node_budget=node_budget)
    brv1 = best_response_value(spec, s0, pi2, responder=1, horizon=horizon, node_budget=node_budget)
    return brv1 + brv2


def uniform_policy(spec: GameSpec, player: int) -> Policy:
    def policy(state, depth):
        k = spec.action_counts(state)[player - 1]
        return np.full(k, 1.0 / k)
    return policy


def pure_policy(spec: GameSpec, player: int, action: int) -> Policy:
    def policy(state, depth):
        p = np.zeros(spec.action_counts(state)[player - 1])
        p[action] = 1.0
        return p
    return policy
