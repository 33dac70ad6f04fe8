"""Simultaneous-move MCTS over a tree of matrix games.

Each expanded node keeps an ``n x m`` table of edge rewards ``R``, child
value estimates ``V`` and visit counts ``N``. Selection solves two
UCB-augmented stage games, one from each player's point of view, with a few
rounds of regret matching. Backups replace the mean backup of classic MCTS
with the regret-matching value of the stage game ``R + gamma * V``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from .game import GameSpec, JointAction, StepResult
from .matgame import RegretState, uniform


class Evaluator(Protocol):
    def evaluate(self, states: list) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return player-1 priors ``(k, n)``, player-2 priors ``(k, m)`` and values ``(k,)``."""


class UniformEvaluator:
    """Baseline oracle: uniform priors and zero value everywhere."""

    def __init__(self, spec: GameSpec):
        self.spec = spec

    def evaluate(self, states):
        n, m = self.spec.num_actions
        k = len(states)
        return np.full((k, n), 1.0 / n), np.full((k, m), 1.0 / m), np.zeros(k)


class TableEvaluator:
    """Uniform priors with values looked up from a ``(depth, state)`` table.

    ``depth_of`` maps a state to the depth it was stored under, which for
    repeated and tree games is just the step count.
    """

    def __init__(self, spec: GameSpec, values: dict, depth_of):
        self.spec = spec
        self.values = values
        self.depth_of = depth_of

    def evaluate(self, states):
        n, m = self.spec.num_actions
        k = len(states)
        v = np.array([self.values.get((self.depth_of(s), s), 0.0) for s in states])
        return np.full((k, n), 1.0 / n), np.full((k, m), 1.0 / m), v


@dataclass
class SearchConfig:
    n_sim: int = 128
    c_puct: float = 2.0
    rm_iters: int = 32
    root_rm_iters: int = 512
    gamma: float | None = None
    horizon: int | None = None

    def validate(self) -> None:
        if self.n_sim < 1:
            raise ValueError(f"n_sim must be >= 1, got {self.n_sim}")
        if self.c_puct < 0:
            raise ValueError(f"c_puct must be >= 0, got {self.c_puct}")
        if self.rm_iters < 1 or self.root_rm_iters < 1:
            raise ValueError("rm_iters and root_rm_iters must be >= 1")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")


@dataclass
class SearchResult:
    pi1: np.ndarray
    pi2: np.ndarray
    v_root: float


@dataclass(eq=False)
class SearchNode:
    state: Any
    depth: int
    terminal: bool
    expanded: bool = False
    R: np.ndarray | None = None
    V: np.ndarray | None = None
    N: np.ndarray | None = None
    visits: int = 0
    p1: np.ndarray | None = None
    p2: np.ndarray | None = None
    value: float = 0.0
    pi1: np.ndarray | None = None
    pi2: np.ndarray | None = None
    steps: list[list[StepResult]] | None = None
    children: dict[tuple[int, int], "SearchNode"] = field(default_factory=dict)

    @property
    def joint_prior(self) -> np.ndarray:
        return np.outer(self.p1, self.p2)


def _renormalize(p: np.ndarray, k: int) -> np.ndarray:
    p = np.asarray(p[:k], dtype=np.float64)
    s = p.sum()
    return p / s if s > 0 else uniform(k)


def _rm_average(A: np.ndarray, iters: int) -> tuple[np.ndarray, np.ndarray, float]:
    A = np.ascontiguousarray(A)
    state = RegretState.zeros(*A.shape)
    state.run(A, iters)
    x, y = state.average()
    return x, y, float(x @ A @ y)


class SearchTree:
    """One search from a fixed root; rebuilt for every move."""

    def __init__(self, spec: GameSpec, root_state, evaluator: Evaluator,
                 cfg: SearchConfig, rng: np.random.Generator | int | None = None):
        cfg.validate()
        self.spec = spec
        self.evaluator = evaluator
        self.cfg = cfg
        self.gamma = spec.gamma if cfg.gamma is None else cfg.gamma
        self.rng = np.random.default_rng(rng)
        self.root = SearchNode(root_state, 0, spec.is_terminal(root_state))
        self.node_count = 1
        self.rm_solves = 0

    # -- Algorithm pieces ---------------------------------------------------

    def simulate(self, node: SearchNode) -> float:
        if node.terminal:
            return 0.0
        if not node.expanded:
            if self.cfg.horizon is not None and node.depth >= self.cfg.horizon:
                # frontier: trust the evaluator
                node.value = float(self.evaluator.evaluate([node.state])[2][0])
                return node.value
            self.expand(node)
            node.pi1, node.pi2, node.value = self._solve(self.stage_matrix(node), self.cfg.rm_iters)
            return node.value
        a = self.select_joint_action(node)
        child = self.child(node, a)
        v_child = self.simulate(child)
        return self.backup(node, a, v_child)

    def expand(self, node: SearchNode) -> None:
        spec = self.spec
        n, m = spec.action_counts(node.state)
        node.steps = [[spec.step(node.state, j, k) for k in range(m)] for j in range(n)]
        node.R = np.array([[r.reward1 for r in row] for row in node.steps])
        node.V = np.zeros((n, m))
        node.N = np.zeros((n, m), dtype=np.int64)
        live = [(j, k) for j in range(n) for k in range(m) if not node.steps[j][k].terminal]
        batch = [node.state] + [node.steps[j][k].next_state for j, k in live]
        p1, p2, v = self.evaluator.evaluate(batch)
        for (j, k), val in zip(live, v[1:]):
            node.V[j, k] = val
        node.p1 = _renormalize(p1[0], n)
        node.p2 = _renormalize(p2[0], m)
        node.expanded = True

    def stage_matrix(self, node: SearchNode) -> np.ndarray:
        return node.R + self.gamma * node.V

    def exploration_bonus(self, node: SearchNode) -> np.ndarray:
        return self.cfg.c_puct * node.joint_prior * np.sqrt(node.visits) / (1.0 + node.N)

    def select_joint_action(self, node: SearchNode) -> JointAction:
        A = self.stage_matrix(node)
        bonus = self.exploration_bonus(node)
        # player 1 maximizes A + bonus; player 2 maximizes -A + bonus, i.e. minimizes A - bonus
        x, _, _ = self._solve(A + bonus, self.cfg.rm_iters)
        _, y, _ = self._solve(A - bonus, self.cfg.rm_iters)
        a1 = int(self.rng.choice(x.shape[0], p=x))
        a2 = int(self.rng.choice(y.shape[0], p=y))
        return JointAction(a1, a2)

    def backup(self, node: SearchNode, a: JointAction, v_child: float) -> float:
        node.N[a] += 1
        node.visits += 1
        node.V[a] = v_child
        node.pi1, node.pi2, node.value = self._solve(self.stage_matrix(node), self.cfg.rm_iters)
        return node.value

    def extract_root_policies(self) -> SearchResult:
        if not self.root.expanded:
            raise ValueError("root has not been expanded")
        x, y, v = self._solve(self.stage_matrix(self.root), self.cfg.root_rm_iters)
        return SearchResult(x, y, v)

    # -- helpers --------------------------------------------------------------

    def child(self, node: SearchNode, a: JointAction) -> SearchNode:
        key = (a[0], a[1])
        c = node.children.get(key)
        if c is None:
            r = node.steps[a[0]][a[1]]
            c = SearchNode(r.next_state, node.depth + 1, r.terminal)
            node.children[key] = c
            self.node_count += 1
        return c

    def _solve(self, A: np.ndarray, iters: int):
        self.rm_solves += 1
        return _rm_average(A, iters)

    def run(self) -> SearchResult:
        if self.root.terminal:
            raise ValueError("search root is terminal")
        for _ in range(self.cfg.n_sim):
            self.simulate(self.root)
        return self.extract_root_policies()


def run_search(spec: GameSpec, s0, evaluator: Evaluator, cfg: SearchConfig,
               rng: np.random.Generator | int | None = None) -> SearchResult:
    """Run ``cfg.n_sim`` simulations from ``s0`` and return the root strategies and value."""
    return SearchTree(spec, s0, evaluator, cfg, rng).run()


def visit_counts_consistent(node: SearchNode) -> bool:
    """Check ``N(s) == sum N(s, a1, a2)`` over the whole subtree."""
    if not node.expanded:
        return True
    if int(node.N.sum()) != node.visits:
        return False
    return all(visit_counts_consistent(c) for c in node.children.values())
