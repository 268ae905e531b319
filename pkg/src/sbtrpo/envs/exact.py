"""Exact (linear-algebra) evaluation and optimisation on tabular CMDPs.

Everything here is a brute-force oracle: discounted values come from dense
linear solves, optima from policy iteration.  Terminal states are treated
as absorbing with no further reward or cost.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..errors import InfeasibleError, InputError, NumericalError
from .tabular import TabularCMDP


def _effective(env: TabularCMDP, signal: np.ndarray):
    """Transition tensor and expected per-(s, a) signal with terminals absorbing."""
    P = env.transition.copy()
    R = P @ signal
    term = np.flatnonzero(env.terminal)
    P[term] = 0.0
    P[term, :, term] = 1.0
    R[term] = 0.0
    return P, R


def _check_table(env: TabularCMDP, table) -> np.ndarray:
    pi = np.asarray(table, dtype=float)
    if pi.shape != (env.n_states, env.n_actions):
        raise InputError(f"policy table must have shape ({env.n_states}, {env.n_actions})")
    if np.any(pi < 0) or np.max(np.abs(pi.sum(axis=1) - 1.0)) > 1e-9:
        raise InputError("policy table rows must be probability vectors")
    return pi


def state_values(env: TabularCMDP, table, signal: np.ndarray) -> np.ndarray:
    """Solve (I - gamma P_pi) v = r_pi for the discounted value of ``signal``."""
    pi = _check_table(env, table)
    P, R = _effective(env, np.asarray(signal, dtype=float))
    P_pi = np.einsum("sa,sat->st", pi, P)
    r_pi = np.sum(pi * R, axis=1)
    try:
        v = np.linalg.solve(np.eye(env.n_states) - env.gamma * P_pi, r_pi)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"policy evaluation system is singular: {exc}") from exc
    if not np.all(np.isfinite(v)):
        raise NumericalError("policy evaluation produced non-finite values")
    return v


def exact_policy_eval(env: TabularCMDP, policy_table) -> tuple[float, float]:
    """Exact discounted (J_r, J_c) from the initial state."""
    s0 = env.initial_state
    return (
        float(state_values(env, policy_table, env.reward)[s0]),
        float(state_values(env, policy_table, env.cost)[s0]),
    )


def q_values(env: TabularCMDP, table, signal) -> tuple[np.ndarray, np.ndarray]:
    v = state_values(env, table, signal)
    P, R = _effective(env, np.asarray(signal, dtype=float))
    return R + env.gamma * P @ v, v


def discounted_visitation(env: TabularCMDP, table) -> np.ndarray:
    """rho(s) = sum_t gamma^t Pr(s_t = s), unnormalised."""
    pi = _check_table(env, table)
    P, _ = _effective(env, env.reward)
    P_pi = np.einsum("sa,sat->st", pi, P)
    start = np.zeros(env.n_states)
    start[env.initial_state] = 1.0
    return np.linalg.solve(np.eye(env.n_states) - env.gamma * P_pi.T, start)


def exact_surrogate(env: TabularCMDP, table_old, table_new, signal) -> float:
    """L_old(new) = J(old) + sum_s rho_old(s) sum_a new(a|s) A_old(s, a)."""
    q, v = q_values(env, table_old, signal)
    adv = q - v[:, None]
    rho = discounted_visitation(env, table_old)
    new = _check_table(env, table_new)
    return float(v[env.initial_state] + rho @ np.sum(new * adv, axis=1))


def max_kl(table_old, table_new) -> float:
    """max_s KL(old(.|s) || new(.|s)); zero-probability actions of ``old`` contribute 0."""
    p = np.asarray(table_old, dtype=float)
    q = np.asarray(table_new, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)
    return float(np.max(terms.sum(axis=1)))


def improvement_bound(env: TabularCMDP, table_old, table_new, signal):
    """Quantities of the two-sided surrogate bound |L - J| <= C * KL_max.

    Returns ``(L, J_new, C, kl_max)`` with
    ``C = 4 gamma max|A_old| / (1 - gamma)^2``.
    """
    q, v = q_values(env, table_old, signal)
    adv_max = float(np.max(np.abs(q - v[:, None])))
    C = 4.0 * env.gamma * adv_max / (1.0 - env.gamma) ** 2
    L = exact_surrogate(env, table_old, table_new, signal)
    J_new = float(state_values(env, table_new, signal)[env.initial_state])
    return L, J_new, C, max_kl(table_old, table_new)


def _policy_iteration(env: TabularCMDP, allowed: np.ndarray, init=None) -> np.ndarray:
    """Best deterministic policy among ``allowed`` (S, A) actions; rows need >= 1 True.

    Actions only change on strict improvement, so ties keep ``init`` (a
    deterministic table) where it is allowed.
    """
    P, R = _effective(env, env.reward)
    greedy = np.argmax(allowed, axis=1)
    if init is not None:
        start = np.argmax(init, axis=1)
        keep = allowed[np.arange(env.n_states), start]
        greedy = np.where(keep, start, greedy)
    table = np.eye(env.n_actions)[greedy]
    for _ in range(10 * env.n_states * env.n_actions + 10):
        v = state_values(env, table, env.reward)
        q = np.where(allowed, R + env.gamma * P @ v, -np.inf)
        current = q[np.arange(env.n_states), greedy]
        best = np.argmax(q, axis=1)
        improve = q[np.arange(env.n_states), best] > current + 1e-12 * (1.0 + np.abs(current))
        if not np.any(improve):
            return table
        greedy = np.where(improve, best, greedy)
        table = np.eye(env.n_actions)[greedy]
    raise NumericalError("policy iteration did not converge")


def optimal_policy(env: TabularCMDP, init=None) -> tuple[float, np.ndarray]:
    """Unconstrained optimum (J_r*, deterministic policy table); ties prefer ``init``."""
    table = _policy_iteration(env, np.ones((env.n_states, env.n_actions), dtype=bool), init)
    return float(state_values(env, table, env.reward)[env.initial_state]), table


def safe_actions(env: TabularCMDP) -> np.ndarray:
    """(S, A) mask of actions that can be taken forever without ever incurring cost.

    An action is safe when every successor has zero cost and is itself
    viable (terminal, or has a safe action).  Computed as a greatest fixed
    point.
    """
    support = env.transition > 0
    zero_cost = env.cost == 0
    viable = np.ones(env.n_states, dtype=bool)
    while True:
        ok = zero_cost & viable
        mask = np.all(~support | ok[None, None, :], axis=2)
        new_viable = env.terminal | mask.any(axis=1)
        if np.array_equal(new_viable, viable):
            break
        viable = new_viable
    mask[env.terminal] = True
    return mask


def _reaches_terminal(env: TabularCMDP, mask: np.ndarray) -> bool:
    support = env.transition > 0
    seen = {env.initial_state}
    queue = deque([env.initial_state])
    while queue:
        s = queue.popleft()
        if env.terminal[s]:
            return True
        for nxt in np.flatnonzero(np.any(support[s][mask[s]], axis=0)):
            if nxt not in seen:
                seen.add(int(nxt))
                queue.append(int(nxt))
    return False


def constrained_optimum_oracle(env: TabularCMDP) -> tuple[float, np.ndarray]:
    """Best strictly safe deterministic policy: (J_r_safe_star, policy table).

    Raises InfeasibleError when the initial state admits no cost-free
    continuation, or when the environment has terminal states and none of
    them can be reached without cost.
    """
    mask = safe_actions(env)
    if not mask[env.initial_state].any():
        raise InfeasibleError("no action sequence from the start state avoids cost")
    if env.terminal.any() and not _reaches_terminal(env, mask):
        raise InfeasibleError("no cost-free path from the start state to a terminal state")
    allowed = mask.copy()
    allowed[~allowed.any(axis=1)] = True  # non-viable states are never visited
    table = _policy_iteration(env, allowed)
    return float(state_values(env, table, env.reward)[env.initial_state]), table
