"""Continuous 2-D point-mass tasks with sparse binary costs.

The agent commands a velocity in [-1, 1]^2 that moves it by
``step_size * action`` each step.  Both tasks truncate at ``horizon``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, StateError
from .tabular import StepOutcome


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    radius: float

    def contains(self, p) -> bool:
        return (p[0] - self.x) ** 2 + (p[1] - self.y) ** 2 < self.radius**2


class _PointEnv:
    discrete = False
    act_dim = 2

    def __init__(self, horizon: int = 200, step_size: float = 0.1, bound: float = 2.0):
        self.horizon = horizon
        self.step_size = step_size
        self.bound = bound
        self._rng = np.random.default_rng(0)
        self.position = np.zeros(2)
        self.step_count = 0
        self._finished = True

    def _move(self, action) -> tuple[np.ndarray, np.ndarray]:
        if self._finished:
            raise StateError("step() called on a finished episode; call reset() first")
        a = np.asarray(action, dtype=float)
        if a.shape != (2,):
            raise InputError(f"action must have shape (2,), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("action contains non-finite values")
        a = np.clip(a, -1.0, 1.0)
        old = self.position
        self.position = np.clip(old + self.step_size * a, -self.bound, self.bound)
        self.step_count += 1
        return old, a


class PointGoal2D(_PointEnv):
    """Reach a goal disc while avoiding hazard discs.

    Observation: ``[x, y, goal_x - x, goal_y - y]``.  Reward is the
    decrease in distance to the goal centre; cost is 1 for each step that
    ends inside a hazard.
    """

    obs_dim = 4

    def __init__(
        self,
        goal: Circle = Circle(1.0, 1.0, 0.3),
        hazards: tuple[Circle, ...] = (Circle(0.0, 0.0, 0.35), Circle(0.55, -0.25, 0.25), Circle(-0.25, 0.55, 0.25)),
        start=(-1.0, -1.0),
        start_jitter: float = 0.1,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.goal = goal
        self.hazards = tuple(hazards)
        self.start = np.asarray(start, dtype=float)
        self.start_jitter = start_jitter

    def _obs(self) -> np.ndarray:
        p = self.position
        return np.array([p[0], p[1], self.goal.x - p[0], self.goal.y - p[1]])

    def _dist(self, p) -> float:
        return float(np.hypot(self.goal.x - p[0], self.goal.y - p[1]))

    def reset(self, seed: int | None = None) -> np.ndarray:
        self._rng = np.random.default_rng(seed)
        self.position = self.start + self._rng.uniform(-self.start_jitter, self.start_jitter, size=2)
        self.step_count = 0
        self._finished = False
        return self._obs()

    def step(self, action) -> StepOutcome:
        old, _ = self._move(action)
        p = self.position
        d_new = self._dist(p)
        reward = self._dist(old) - d_new
        cost = 1.0 if any(h.contains(p) for h in self.hazards) else 0.0
        done = d_new <= self.goal.radius
        truncated = not done and self.step_count >= self.horizon
        self._finished = done or truncated
        return StepOutcome(self._obs(), reward, cost, done, truncated)


class PointCircle2D(_PointEnv):
    """Circle the origin, fastest along a target ring, inside a permitted band.

    Observation: ``[x, y, r]``.  Reward is the tangential speed about the
    origin times ``step_size``, divided by ``1 + |r - target_radius|``;
    cost is 1 for each step that ends outside ``inner <= r <= outer``.
    """

    obs_dim = 3

    def __init__(self, target_radius: float = 1.0, inner_radius: float = 0.0, outer_radius: float = 1.2, **kwargs):
        super().__init__(**kwargs)
        if not 0.0 <= inner_radius < outer_radius:
            raise InputError("need 0 <= inner_radius < outer_radius")
        self.target_radius = target_radius
        self.inner_radius = inner_radius
        self.outer_radius = outer_radius

    def _obs(self) -> np.ndarray:
        p = self.position
        return np.array([p[0], p[1], float(np.hypot(p[0], p[1]))])

    def reset(self, seed: int | None = None) -> np.ndarray:
        self._rng = np.random.default_rng(seed)
        self.position = np.zeros(2)
        self.step_count = 0
        self._finished = False
        return self._obs()

    def step(self, action) -> StepOutcome:
        old, _ = self._move(action)
        vel = (self.position - old) / self.step_size
        r_old = float(np.hypot(*old))
        tangential = (old[0] * vel[1] - old[1] * vel[0]) / r_old if r_old > 0 else 0.0
        r = float(np.hypot(*self.position))
        reward = self.step_size * tangential / (1.0 + abs(r - self.target_radius))
        cost = 0.0 if self.inner_radius <= r <= self.outer_radius else 1.0
        truncated = self.step_count >= self.horizon
        self._finished = truncated
        return StepOutcome(self._obs(), reward, cost, False, truncated)
