"""Dubin Tag: an attacker races for a unit goal disk while a faster defender tries to tag it.

Both agents are planar Dubin vehicles (constant speed, bounded turn rate)
choosing a turn rate from ``{-u_max, 0, +u_max}`` every step. The attacker is
player 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..game import GameSpec, StepResult

TURNS = (-1.0, 0.0, 1.0)


def wrap_angle(theta: float) -> float:
    """Wrap to ``[-pi, pi)``."""
    return (theta + math.pi) % (2.0 * math.pi) - math.pi


def dubin_arc(x: float, y: float, theta: float, v: float, u: float, dt: float) -> tuple[float, float, float]:
    """Closed-form solution of ``x' = v cos(theta), y' = v sin(theta), theta' = u`` over ``dt``."""
    if u == 0.0:
        return x + v * dt * math.cos(theta), y + v * dt * math.sin(theta), wrap_angle(theta)
    th = theta + u * dt
    r = v / u
    return x + r * (math.sin(th) - math.sin(theta)), y - r * (math.cos(th) - math.cos(theta)), wrap_angle(th)


@dataclass(frozen=True)
class DubinState:
    attacker: tuple[float, float, float]
    defender: tuple[float, float, float]
    t: int = 0
    done: bool = False


@dataclass
class DubinConfig:
    v_att: float = 1.0
    v_def: float = 1.1
    u_max: float = 1.0
    dt: float = 0.3
    goal: tuple[float, float] = (0.0, 0.0)
    goal_radius: float = 1.0
    capture_radius: float = 0.5
    horizon: int = 20
    gamma: float = 0.99
    arena: float = 6.0
    attacker_radius: tuple[float, float] = (4.0, 6.0)
    defender_radius: tuple[float, float] = (1.5, 2.5)

    def validate(self) -> None:
        if self.v_att <= 0 or self.v_def <= 0:
            raise ValueError("speeds must be > 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.u_max <= 0:
            raise ValueError("u_max must be > 0")
        if self.capture_radius <= 0:
            raise ValueError("capture_radius must be > 0")
        if self.goal_radius != 1.0:
            raise ValueError("goal_radius is fixed at 1")


class DubinTag(GameSpec):
    name = "dubin"
    num_actions = (3, 3)
    encoding_size = 8

    def __init__(self, cfg: DubinConfig | None = None):
        self.cfg = cfg or DubinConfig()
        self.cfg.validate()
        self.horizon = self.cfg.horizon
        self.gamma = self.cfg.gamma
        self._check()

    def value_bound(self) -> float:
        # a single terminal +-1 is the only reward
        return 1.0

    def initial_state(self, rng=None) -> DubinState:
        c = self.cfg
        gx, gy = c.goal
        if rng is None:
            ar, aa = sum(c.attacker_radius) / 2, math.pi / 2
            dr, da = sum(c.defender_radius) / 2, math.pi / 2
        else:
            ar, aa = rng.uniform(*c.attacker_radius), rng.uniform(-math.pi, math.pi)
            dr, da = rng.uniform(*c.defender_radius), aa + rng.uniform(-0.5, 0.5)
        att = (gx + ar * math.cos(aa), gy + ar * math.sin(aa))
        dfn = (gx + dr * math.cos(da), gy + dr * math.sin(da))
        # attacker heads at the goal, defender at the attacker
        th_a = math.atan2(gy - att[1], gx - att[0])
        th_d = math.atan2(att[1] - dfn[1], att[0] - dfn[0])
        return DubinState((att[0], att[1], wrap_angle(th_a)), (dfn[0], dfn[1], wrap_angle(th_d)), 0)

    def is_terminal(self, state: DubinState) -> bool:
        return state.done or state.t >= self.horizon

    def outcome(self, att, dfn) -> float | None:
        """+1 goal reached, -1 tagged (tagging wins ties), None otherwise."""
        c = self.cfg
        if math.hypot(att[0] - dfn[0], att[1] - dfn[1]) <= c.capture_radius:
            return -1.0
        if math.hypot(att[0] - c.goal[0], att[1] - c.goal[1]) < c.goal_radius:
            return 1.0
        return None

    def transition(self, state: DubinState, a1: int, a2: int) -> StepResult:
        c = self.cfg
        att = dubin_arc(*state.attacker, c.v_att, TURNS[a1] * c.u_max, c.dt)
        dfn = dubin_arc(*state.defender, c.v_def, TURNS[a2] * c.u_max, c.dt)
        res = self.outcome(att, dfn)
        t = state.t + 1
        nxt = DubinState(att, dfn, t, res is not None)
        return StepResult(nxt, 0.0 if res is None else res, res is not None or t >= self.horizon)

    def encode(self, state: DubinState) -> np.ndarray:
        s = self.cfg.arena
        ax, ay, at = state.attacker
        dx, dy, dt = state.defender
        return np.array([ax / s, ay / s, math.cos(at), math.sin(at),
                         dx / s, dy / s, math.cos(dt), math.sin(dt)])


def dubin_step(s: DubinState, a1: int, a2: int, cfg: DubinConfig | None = None) -> StepResult:
    return DubinTag(cfg).step(s, a1, a2)
