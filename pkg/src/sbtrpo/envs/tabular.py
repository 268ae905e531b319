"""Explicit finite CMDPs and a sampling environment over them.

Reward and cost are attached to states and are received on *entering* a
state: a transition ``s -a-> s'`` yields ``reward[s']`` and ``cost[s']``.
Entering a terminal state ends the episode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, StateError


@dataclass(frozen=True)
class StepOutcome:
    obs: np.ndarray
    reward: float
    cost: float
    done: bool
    truncated: bool


@dataclass(frozen=True, eq=False)
class TabularCMDP:
    transition: np.ndarray  # (S, A, S), row-stochastic
    reward: np.ndarray  # (S,)
    cost: np.ndarray  # (S,), >= 0
    gamma: float
    initial_state: int
    terminal: np.ndarray  # (S,) bool

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "reward", np.asarray(self.reward, dtype=float))
        object.__setattr__(self, "cost", np.asarray(self.cost, dtype=float))
        object.__setattr__(self, "terminal", np.asarray(self.terminal, dtype=bool))
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise InputError("transition must have shape (S, A, S)")
        S = P.shape[0]
        for name in ("reward", "cost", "terminal"):
            if getattr(self, name).shape != (S,):
                raise InputError(f"{name} must have shape ({S},)")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > 1e-12:
            raise InputError("transition rows must be probability vectors")
        if np.any(self.cost < 0):
            raise InputError("costs must be non-negative")
        if not 0.0 <= self.gamma < 1.0:
            raise InputError("gamma must lie in [0, 1)")
        if not 0 <= self.initial_state < S:
            raise InputError("initial_state out of range")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def one_hot(self, state: int) -> np.ndarray:
        obs = np.zeros(self.n_states)
        obs[state] = 1.0
        return obs


class TabularEnv:
    """Sampling environment over a :class:`TabularCMDP`.

    Observations are one-hot state encodings; actions are integer indices.
    ``episode_cap`` truncates episodes after that many steps (``None`` for
    no cap).
    """

    discrete = True

    def __init__(self, cmdp: TabularCMDP, episode_cap: int | None = None):
        self.cmdp = cmdp
        self.episode_cap = episode_cap
        self._cum = np.cumsum(cmdp.transition, axis=2)
        self._det = np.where(cmdp.transition.max(axis=2) == 1.0, cmdp.transition.argmax(axis=2), -1)
        self._rng = np.random.default_rng(0)
        self.state = None
        self.step_count = 0
        self._finished = True

    @property
    def obs_dim(self) -> int:
        return self.cmdp.n_states

    @property
    def act_dim(self) -> int:
        return self.cmdp.n_actions

    def reset(self, seed: int | None = None) -> np.ndarray:
        self._rng = np.random.default_rng(seed)
        self.state = self.cmdp.initial_state
        self.step_count = 0
        self._finished = False
        return self.cmdp.one_hot(self.state)

    def step(self, action) -> StepOutcome:
        if self._finished:
            raise StateError("step() called on a finished episode; call reset() first")
        a = int(action)
        if not 0 <= a < self.act_dim:
            raise InputError(f"action {a} out of range [0, {self.act_dim})")
        nxt = int(self._det[self.state, a])
        if nxt < 0:
            u = self._rng.random()
            nxt = min(int(np.searchsorted(self._cum[self.state, a], u, side="right")), self.cmdp.n_states - 1)
        self.state = nxt
        self.step_count += 1
        done = bool(self.cmdp.terminal[nxt])
        truncated = (not done) and self.episode_cap is not None and self.step_count >= self.episode_cap
        self._finished = done or truncated
        return StepOutcome(
            obs=self.cmdp.one_hot(nxt),
            reward=float(self.cmdp.reward[nxt]),
            cost=float(self.cmdp.cost[nxt]),
            done=done,
            truncated=truncated,
        )
