"""Deterministic two-player zero-sum Markov games with simultaneous moves."""
from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np


class JointAction(NamedTuple):
    a1: int
    a2: int


@dataclass(frozen=True)
class StepResult:
    next_state: Any
    reward1: float
    terminal: bool

    @property
    def reward2(self) -> float:
        return -self.reward1


@dataclass
class TrajectoryStep:
    state: Any
    pi1: np.ndarray
    pi2: np.ndarray
    reward1: float


@dataclass
class Trajectory:
    steps: list[TrajectoryStep] = field(default_factory=list)
    final_state: Any = None
    terminal: bool = False

    @property
    def T(self) -> int:
        return len(self.steps) - 1

    def rewards(self) -> list[float]:
        return [s.reward1 for s in self.steps]


class GameSpec(abc.ABC):
    """Base class for every environment.

    Subclasses set ``horizon``, ``gamma``, ``num_actions`` (head widths for
    the network), ``encoding_size`` and ``reward_bound`` (max |reward1| of a
    single step), and implement the hooks below. ``tabular`` marks games
    whose states are hashable and recur, so exact solvers may memoize them.
    """

    name: str = "game"
    tabular: bool = False
    horizon: int
    gamma: float
    num_actions: tuple[int, int]
    encoding_size: int
    reward_bound: float = 1.0

    def _check(self) -> None:
        if int(self.horizon) < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 <= float(self.gamma) <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    @abc.abstractmethod
    def initial_state(self, rng: np.random.Generator | None = None) -> Any:
        """Draw ``s0`` from the initial distribution; ``None`` means the default start."""

    @abc.abstractmethod
    def is_terminal(self, state) -> bool: ...

    @abc.abstractmethod
    def transition(self, state, a1: int, a2: int) -> StepResult:
        """Unchecked deterministic transition."""

    @abc.abstractmethod
    def encode(self, state) -> np.ndarray: ...

    def action_counts(self, state) -> tuple[int, int]:
        return self.num_actions

    def step(self, state, a1: int, a2: int) -> StepResult:
        if self.is_terminal(state):
            raise ValueError("cannot step a terminal state")
        n, m = self.action_counts(state)
        if not (0 <= a1 < n and 0 <= a2 < m):
            raise IndexError(f"joint action ({a1}, {a2}) outside {n}x{m}")
        return self.transition(state, int(a1), int(a2))

    def value_bound(self) -> float:
        """Largest achievable |return|: sum over the horizon of gamma^t * reward_bound."""
        return float(sum(self.gamma ** t for t in range(self.horizon)) * self.reward_bound)

    def config(self) -> dict:
        return {"name": self.name, "horizon": self.horizon, "gamma": self.gamma}


def step(spec: GameSpec, s, a: JointAction | tuple[int, int]) -> StepResult:
    return spec.step(s, a[0], a[1])


def encode_state(spec: GameSpec, s) -> np.ndarray:
    x = np.asarray(spec.encode(s), dtype=np.float64)
    if x.shape != (spec.encoding_size,):
        raise ValueError(f"{spec.name} encoding has shape {x.shape}, expected ({spec.encoding_size},)")
    return x


def stage_matrices(spec: GameSpec, s) -> tuple[np.ndarray, list[list[StepResult]]]:
    """Immediate reward matrix and the step results of every joint action at ``s``."""
    n, m = spec.action_counts(s)
    results = [[spec.step(s, j, k) for k in range(m)] for j in range(n)]
    R = np.array([[r.reward1 for r in row] for row in results], dtype=np.float64)
    return R, results
