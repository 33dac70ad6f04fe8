"""Small tabular games with known solutions, used to validate the solvers."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..game import GameSpec, StepResult

MATCHING_PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])
ROCK_PAPER_SCISSORS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
ASYM22 = np.array([[2.0, -1.0], [-1.0, 1.0]])


class RepeatedMatrixGame(GameSpec):
    """The same stage matrix played ``horizon`` times; the state is the step index."""

    tabular = True

    def __init__(self, matrix, horizon: int = 1, gamma: float = 1.0, name: str = "repeated"):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.horizon = int(horizon)
        self.gamma = float(gamma)
        self.name = name
        self.num_actions = self.matrix.shape
        self.encoding_size = self.horizon
        self.reward_bound = float(np.abs(self.matrix).max())
        self._check()

    def initial_state(self, rng=None) -> int:
        return 0

    def is_terminal(self, state: int) -> bool:
        return state >= self.horizon

    def transition(self, state: int, a1: int, a2: int) -> StepResult:
        nxt = state + 1
        return StepResult(nxt, float(self.matrix[a1, a2]), nxt >= self.horizon)

    def encode(self, state: int) -> np.ndarray:
        x = np.zeros(self.encoding_size)
        x[min(state, self.horizon - 1)] = 1.0
        return x

    def config(self) -> dict:
        return {**super().config(), "matrix": self.matrix.tolist()}


def matching_pennies(horizon: int = 1, gamma: float = 1.0) -> RepeatedMatrixGame:
    return RepeatedMatrixGame(MATCHING_PENNIES, horizon, gamma, f"matching_pennies({horizon})")


def rps(horizon: int = 1, gamma: float = 1.0) -> RepeatedMatrixGame:
    return RepeatedMatrixGame(ROCK_PAPER_SCISSORS, horizon, gamma, f"rps({horizon})")


def asym22(horizon: int = 1, gamma: float = 1.0) -> RepeatedMatrixGame:
    return RepeatedMatrixGame(ASYM22, horizon, gamma, f"asym22({horizon})")


@dataclass(frozen=True)
class GridState:
    pursuer: tuple[int, int]
    evader: tuple[int, int]
    t: int
    captured: bool = False


# stay, north, south, east, west
GRID_MOVES = ((0, 0), (-1, 0), (1, 0), (0, 1), (0, -1))


class GridPursuit(GameSpec):
    """Simultaneous pursuit on a k x k torus.

    Player 1 is the pursuer and earns +1 (the evader -1) when both agents
    share a cell after a move, which ends the game.
    """

    tabular = True
    num_actions = (5, 5)

    def __init__(self, k: int = 3, horizon: int = 3, gamma: float = 1.0,
                 start: tuple[tuple[int, int], tuple[int, int]] | None = None):
        if k < 2:
            raise ValueError("grid size must be >= 2")
        self.k = int(k)
        self.horizon = int(horizon)
        self.gamma = float(gamma)
        self.name = f"grid_pursuit({k},{horizon})"
        self.encoding_size = 2 * k * k + horizon
        self.start = start or ((0, 0), (k // 2, k // 2))
        self._check()

    def initial_state(self, rng=None) -> GridState:
        if rng is None:
            return GridState(tuple(self.start[0]), tuple(self.start[1]), 0)
        cells = rng.choice(self.k * self.k, size=2, replace=False)
        p, e = (divmod(int(c), self.k) for c in cells)
        return GridState(p, e, 0)

    def is_terminal(self, state: GridState) -> bool:
        return state.captured or state.t >= self.horizon

    def _move(self, pos, a):
        dr, dc = GRID_MOVES[a]
        return ((pos[0] + dr) % self.k, (pos[1] + dc) % self.k)

    def transition(self, state: GridState, a1: int, a2: int) -> StepResult:
        p = self._move(state.pursuer, a1)
        e = self._move(state.evader, a2)
        captured = p == e
        nxt = GridState(p, e, state.t + 1, captured)
        return StepResult(nxt, 1.0 if captured else 0.0, self.is_terminal(nxt))

    def encode(self, state: GridState) -> np.ndarray:
        x = np.zeros(self.encoding_size)
        kk = self.k * self.k
        x[state.pursuer[0] * self.k + state.pursuer[1]] = 1.0
        x[kk + state.evader[0] * self.k + state.evader[1]] = 1.0
        x[2 * kk + min(state.t, self.horizon - 1)] = 1.0
        return x

    def config(self) -> dict:
        return {**super().config(), "k": self.k}


class RandomTreeGame(GameSpec):
    """Random deterministic game tree; the state is the joint-action history.

    Every node at depth ``d < depth`` draws an ``n x m`` reward matrix from
    ``reward_range``, and every node at ``depth`` a value in the same range
    (``leaf_values``). Nodes at ``depth`` are terminal unless ``open_frontier``
    is set, in which case solvers cut off there and use ``leaf_values``.
    """

    tabular = True

    def __init__(self, n: int = 2, m: int = 2, depth: int = 2, gamma: float = 1.0,
                 reward_range: tuple[float, float] = (-1.0, 1.0), seed: int = 0,
                 open_frontier: bool = False):
        self.num_actions = (int(n), int(m))
        self.horizon = int(depth)
        self.gamma = float(gamma)
        self.reward_range = (float(reward_range[0]), float(reward_range[1]))
        self.name = f"random_tree({n}x{m},d={depth},seed={seed})"
        self.reward_bound = max(abs(self.reward_range[0]), abs(self.reward_range[1]))
        self.seed = seed
        self.open_frontier = open_frontier
        self._check()
        rng = np.random.default_rng(seed)
        self.rewards: dict[tuple, np.ndarray] = {}
        frontier = [()]
        for _ in range(self.horizon):
            nxt = []
            for h in frontier:
                self.rewards[h] = rng.uniform(*self.reward_range, size=self.num_actions)
                nxt.extend(h + ((j, k),) for j in range(n) for k in range(m))
            frontier = nxt
        self.leaves = frontier
        self.leaf_values = {h: float(v) for h, v in zip(frontier, rng.uniform(*self.reward_range, size=len(frontier)))}
        self.encoding_size = self.horizon + 1

    def initial_state(self, rng=None) -> tuple:
        return ()

    def is_terminal(self, state: tuple) -> bool:
        return not self.open_frontier and len(state) >= self.horizon

    def transition(self, state: tuple, a1: int, a2: int) -> StepResult:
        if len(state) >= self.horizon:
            raise ValueError("cannot step past the frontier of a random tree")
        nxt = state + ((a1, a2),)
        return StepResult(nxt, float(self.rewards[state][a1, a2]), self.is_terminal(nxt))

    def encode(self, state: tuple) -> np.ndarray:
        x = np.zeros(self.encoding_size)
        x[len(state)] = 1.0
        return x

    def level_arrays(self) -> tuple[list[np.ndarray], np.ndarray]:
        """Rewards per level as ``((n*m)**d, n, m)`` arrays plus leaf values, in row-major child order."""
        levels = [[()]]
        n, m = self.num_actions
        for _ in range(self.horizon - 1):
            levels.append([h + ((j, k),) for h in levels[-1] for j in range(n) for k in range(m)])
        R = [np.stack([self.rewards[h] for h in lvl]) for lvl in levels]
        return R, np.array([self.leaf_values[h] for h in self.leaves])


TOYS = {
    "matching_pennies": matching_pennies,
    "rps": rps,
    "asym22": asym22,
    "grid_pursuit": GridPursuit,
}


def make_tabular_toy(name: str, *args, **kwargs) -> GameSpec:
    """Build a toy game by name, e.g. ``make_tabular_toy("rps", 2)`` or ``make_tabular_toy("rps(2)")``."""
    m = re.fullmatch(r"\s*(\w+)\s*\(([^)]*)\)\s*", name)
    if m:
        name = m.group(1)
        args = tuple(int(a) for a in m.group(2).split(",") if a.strip()) + args
    if name not in TOYS:
        raise KeyError(f"unknown toy game {name!r}; choose from {sorted(TOYS)}")
    return TOYS[name](*args, **kwargs)
