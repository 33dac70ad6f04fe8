"""Planar custody game in low Earth orbit.

An observer satellite (player 1) tries to keep a usable line of sight on a
maneuvering target (player 2). Each step both apply an impulsive burn, then
propagate two-body motion with fixed-step RK4. The observer scores +1 for
every step that ends with custody: the Earth does not block the line of
sight, the target is sunlit, and the observer is not looking into the sun.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..game import GameSpec, StepResult

MU_EARTH = 398600.4418  # km^3/s^2
R_EARTH = 6378.137  # km

# coast, prograde, retrograde, radial-in, radial-out
MANEUVERS = ("coast", "prograde", "retrograde", "radial_in", "radial_out")


@dataclass(frozen=True)
class SdaState:
    observer: tuple[float, float, float, float]  # x, y, vx, vy
    target: tuple[float, float, float, float]
    sun: tuple[float, float] = (1.0, 0.0)
    t: int = 0
    done: bool = False


@dataclass
class SdaConfig:
    dv: float = 0.01
    dt: float = 60.0
    substeps: int = 10
    mu: float = MU_EARTH
    earth_radius: float = R_EARTH
    sun_exclusion_deg: float = 30.0
    sun_period: float | None = None
    horizon: int = 24
    gamma: float = 0.99
    observer_altitude: float = 500.0
    target_altitude: float = 400.0
    phase_lag: float = 0.15

    def validate(self) -> None:
        if self.dv < 0:
            raise ValueError("dv must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


def two_body_rhs(s: np.ndarray, mu: float) -> np.ndarray:
    r = s[:2]
    a = -mu * r / np.linalg.norm(r) ** 3
    return np.array([s[2], s[3], a[0], a[1]])


def rk4_step(s: np.ndarray, h: float, mu: float) -> np.ndarray:
    k1 = two_body_rhs(s, mu)
    k2 = two_body_rhs(s + 0.5 * h * k1, mu)
    k3 = two_body_rhs(s + 0.5 * h * k2, mu)
    k4 = two_body_rhs(s + h * k3, mu)
    return s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def propagate(s, duration: float, substeps: int, mu: float = MU_EARTH) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    h = duration / substeps
    for _ in range(substeps):
        s = rk4_step(s, h, mu)
    return s


def specific_energy(s, mu: float = MU_EARTH) -> float:
    return 0.5 * (s[2] ** 2 + s[3] ** 2) - mu / math.hypot(s[0], s[1])


def circular_state(radius: float, phase: float, mu: float = MU_EARTH) -> tuple[float, float, float, float]:
    v = math.sqrt(mu / radius)
    return (radius * math.cos(phase), radius * math.sin(phase),
            -v * math.sin(phase), v * math.cos(phase))


def apply_maneuver(s, action: int, dv: float) -> np.ndarray:
    s = np.array(s, dtype=np.float64)
    if action == 0:
        return s
    r_hat = s[:2] / np.linalg.norm(s[:2])
    v_hat = s[2:] / np.linalg.norm(s[2:])
    direction = {1: v_hat, 2: -v_hat, 3: -r_hat, 4: r_hat}[action]
    s[2:] += dv * direction
    return s


# -- geometry ----------------------------------------------------------------

def sda_eclipse(s: SdaState, cfg: SdaConfig) -> bool:
    """Target inside the Earth's cylindrical shadow."""
    p = np.asarray(s.target[:2])
    sun = np.asarray(s.sun)
    along = p @ sun
    lateral = abs(p[0] * sun[1] - p[1] * sun[0])
    return bool(along < 0 and lateral < cfg.earth_radius)


def segment_occluded(a, b, radius: float) -> bool:
    """Does the segment ``a -> b`` pass within ``radius`` of the origin between its endpoints?"""
    a = np.asarray(a, dtype=np.float64)
    d = np.asarray(b, dtype=np.float64) - a
    dd = d @ d
    if dd == 0.0:
        return False
    u = -(a @ d) / dd
    if not 0.0 < u < 1.0:
        return False
    return bool(np.linalg.norm(a + u * d) < radius)


def sda_los_occluded(s: SdaState, cfg: SdaConfig) -> bool:
    return segment_occluded(s.observer[:2], s.target[:2], cfg.earth_radius)


def sda_sun_blinded(s: SdaState, cfg: SdaConfig) -> bool:
    """Angle between the line of sight and the sun direction under the exclusion half-angle."""
    los = np.asarray(s.target[:2]) - np.asarray(s.observer[:2])
    norm = np.linalg.norm(los)
    if norm == 0.0:
        return True
    cos_angle = float(np.clip(los @ np.asarray(s.sun) / norm, -1.0, 1.0))
    return math.acos(cos_angle) < math.radians(cfg.sun_exclusion_deg)


def has_custody(s: SdaState, cfg: SdaConfig) -> bool:
    return not (sda_los_occluded(s, cfg) or sda_eclipse(s, cfg) or sda_sun_blinded(s, cfg))


class SdaCustody(GameSpec):
    name = "sda"
    num_actions = (5, 5)
    encoding_size = 10

    def __init__(self, cfg: SdaConfig | None = None):
        self.cfg = cfg or SdaConfig()
        self.cfg.validate()
        self.horizon = self.cfg.horizon
        self.gamma = self.cfg.gamma
        self._check()
        self.r0 = self.cfg.earth_radius + self.cfg.observer_altitude
        self.v0 = math.sqrt(self.cfg.mu / self.r0)

    def initial_state(self, rng=None) -> SdaState:
        c = self.cfg
        phase = 0.0 if rng is None else float(rng.uniform(-math.pi, math.pi))
        lag = c.phase_lag if rng is None else float(rng.uniform(0.5, 1.5) * c.phase_lag)
        obs = circular_state(c.earth_radius + c.observer_altitude, phase - lag, c.mu)
        tgt = circular_state(c.earth_radius + c.target_altitude, phase, c.mu)
        sun_angle = 0.0 if rng is None else float(rng.uniform(-math.pi, math.pi))
        return SdaState(obs, tgt, (math.cos(sun_angle), math.sin(sun_angle)), 0)

    def is_terminal(self, state: SdaState) -> bool:
        return state.done or state.t >= self.horizon

    def transition(self, state: SdaState, a1: int, a2: int) -> StepResult:
        c = self.cfg
        obs = propagate(apply_maneuver(state.observer, a1, c.dv), c.dt, c.substeps, c.mu)
        tgt = propagate(apply_maneuver(state.target, a2, c.dv), c.dt, c.substeps, c.mu)
        sun = state.sun
        if c.sun_period:
            ang = math.atan2(sun[1], sun[0]) + 2.0 * math.pi * c.dt / c.sun_period
            sun = (math.cos(ang), math.sin(ang))
        t = state.t + 1
        obs_crash = math.hypot(obs[0], obs[1]) < c.earth_radius
        tgt_crash = math.hypot(tgt[0], tgt[1]) < c.earth_radius
        nxt = SdaState(tuple(map(float, obs)), tuple(map(float, tgt)), sun, t, obs_crash or tgt_crash)
        if obs_crash or tgt_crash:
            reward = -1.0 if obs_crash else 1.0
        else:
            reward = 1.0 if has_custody(nxt, c) else 0.0
        return StepResult(nxt, reward, self.is_terminal(nxt))

    def encode(self, state: SdaState) -> np.ndarray:
        r0, v0 = self.r0, self.v0
        o, g = state.observer, state.target
        return np.array([o[0] / r0, o[1] / r0, o[2] / v0, o[3] / v0,
                         g[0] / r0, g[1] / r0, g[2] / v0, g[3] / v0,
                         state.sun[0], state.sun[1]])


def sda_step(s: SdaState, a1: int, a2: int, cfg: SdaConfig | None = None) -> StepResult:
    return SdaCustody(cfg).step(s, a1, a2)
