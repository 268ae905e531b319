from .exact import (
    constrained_optimum_oracle,
    discounted_visitation,
    exact_policy_eval,
    exact_surrogate,
    improvement_bound,
    max_kl,
    optimal_policy,
    q_values,
    safe_actions,
    state_values,
)
from .grid import DEFAULT_LAYOUT, HazardGrid, grid_cmdp, parse_layout
from .point import Circle, PointCircle2D, PointGoal2D
from .tabular import StepOutcome, TabularCMDP, TabularEnv


def env_reset(env, seed=None):
    return env.reset(seed)


def env_step(env, action) -> StepOutcome:
    return env.step(action)


__all__ = [
    "Circle",
    "DEFAULT_LAYOUT",
    "HazardGrid",
    "PointCircle2D",
    "PointGoal2D",
    "StepOutcome",
    "TabularCMDP",
    "TabularEnv",
    "constrained_optimum_oracle",
    "discounted_visitation",
    "env_reset",
    "env_step",
    "exact_policy_eval",
    "exact_surrogate",
    "grid_cmdp",
    "improvement_bound",
    "max_kl",
    "optimal_policy",
    "parse_layout",
    "q_values",
    "safe_actions",
    "state_values",
]
