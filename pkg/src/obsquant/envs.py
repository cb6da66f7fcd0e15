"""Deterministic continuous-control tasks used in place of physics-engine benchmarks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    name: str
    obs_dim: int
    act_dim: int
    action_low: float
    action_high: float
    max_episode_steps: int
    obs_bound: float


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    terminated: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


def angle_normalize(x: float) -> float:
    return ((x + math.pi) % (2 * math.pi)) - math.pi


class _Env:
    spec: EnvSpec

    def __init__(self):
        self._rng = np.random.default_rng()
        self.steps = 0

    def seed(self, seed: int | None) -> None:
        self._rng = np.random.default_rng(seed)

    def _clip_action(self, action) -> np.ndarray:
        a = np.asarray(action, dtype=np.float64).reshape(self.spec.act_dim)
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite action")
        return np.clip(a, self.spec.action_low, self.spec.action_high)


class Pendulum(_Env):
    """Torque-limited pendulum swing-up; angle 0 is upright.

    Observation ``(cos th, sin th, th_dot)``, reward
    ``-(th^2 + 0.1 th_dot^2 + 0.001 u^2)`` with ``th`` wrapped to ``[-pi, pi]``.
    """

    spec = EnvSpec("pendulum", 3, 1, -2.0, 2.0, 200, 8.0)
    max_speed = 8.0
    max_torque = 2.0
    dt = 0.05
    g = 10.0
    m = 1.0
    l = 1.0

    def __init__(self):
        super().__init__()
        self.state = np.zeros(2)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.seed(seed)
        self.state = self._rng.uniform([-math.pi, -1.0], [math.pi, 1.0])
        self.steps = 0
        return self.observe()

    def set_state(self, theta: float, theta_dot: float) -> np.ndarray:
        self.state = np.array([theta, theta_dot], dtype=np.float64)
        return self.observe()

    def observe(self) -> np.ndarray:
        th, thdot = self.state
        return np.array([math.cos(th), math.sin(th), thdot])

    def energy(self) -> float:
        """Mechanical energy of the uniform rod (zero at the horizontal)."""
        th, thdot = self.state
        inertia = self.m * self.l**2 / 3.0
        return 0.5 * inertia * thdot**2 + 0.5 * self.m * self.g * self.l * math.cos(th)

    def step(self, action) -> StepResult:
        u = float(self._clip_action(action)[0])
        th, thdot = self.state
        cost = angle_normalize(th) ** 2 + 0.1 * thdot**2 + 0.001 * u**2
        # semi-implicit Euler: velocity first, then position with the new velocity
        thdot = thdot + (3.0 * self.g / (2.0 * self.l) * math.sin(th) + 3.0 / (self.m * self.l**2) * u) * self.dt
        thdot = min(max(thdot, -self.max_speed), self.max_speed)
        th = th + thdot * self.dt
        self.state = np.array([th, thdot])
        self.steps += 1
        return StepResult(self.observe(), -cost, False, self.steps >= self.spec.max_episode_steps)


class PointReacher(_Env):
    """Damped point mass in the unit square pushed toward a random goal.

    Observation ``(x, y, vx, vy, goal_x, goal_y)``; reward is minus the
    distance to the goal.
    """

    spec = EnvSpec("reacher", 6, 2, -1.0, 1.0, 150, 127.0)
    dt = 0.05
    damping = 0.5
    max_speed = 2.0

    def __init__(self):
        super().__init__()
        self.pos = np.zeros(2)
        self.vel = np.zeros(2)
        self.goal = np.zeros(2)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.seed(seed)
        self.pos = self._rng.uniform(-1.0, 1.0, 2)
        self.vel = np.zeros(2)
        self.goal = self._rng.uniform(-1.0, 1.0, 2)
        self.steps = 0
        return self.observe()

    def observe(self) -> np.ndarray:
        return np.concatenate([self.pos, self.vel, self.goal])

    def step(self, action) -> StepResult:
        force = self._clip_action(action)
        self.vel = np.clip(self.vel + (force - self.damping * self.vel) * self.dt, -self.max_speed, self.max_speed)
        pos = self.pos + self.vel * self.dt
        hit = np.abs(pos) > 1.0
        self.vel[hit] = 0.0
        self.pos = np.clip(pos, -1.0, 1.0)
        self.steps += 1
        reward = -float(np.linalg.norm(self.pos - self.goal))
        return StepResult(self.observe(), reward, False, self.steps >= self.spec.max_episode_steps)


ENVS = {"pendulum": Pendulum, "reacher": PointReacher}


def make_env(name: str) -> _Env:
    try:
        return ENVS[name]()
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVS)}") from None
