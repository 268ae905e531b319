"""Independent numerical oracles shared by the test modules."""

import numpy as np

from sbtrpo.envs import TabularCMDP
from sbtrpo.policy import log_prob


def central_diff(f, x, direction, h=1e-5):
    return (f(x + h * direction) - f(x - h * direction)) / (2.0 * h)


def fd_gradient(f, x, h=1e-5):
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = 1.0
        g[i] = central_diff(f, x, e, h)
    return g


def random_psd(rng, dim, rank=None, damping=0.0):
    """Random symmetric PSD matrix (rank-deficient if ``rank`` < dim) plus damping * I."""
    rank = dim if rank is None else rank
    A = rng.standard_normal((dim, rank))
    return A @ A.T / rank + damping * np.eye(dim)


def random_actions(rng, spec, n):
    if spec.discrete:
        return rng.integers(spec.act_dim, size=n)
    return rng.standard_normal((n, spec.act_dim))


def logp_fn(spec, obs, action):
    return lambda p: log_prob(p, spec, obs, action)


def random_cmdp(rng, n_states=6, n_actions=3, gamma=0.9, n_terminal=1):
    """Dense random CMDP; the last ``n_terminal`` states are terminal."""
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    terminal = np.zeros(n_states, dtype=bool)
    terminal[n_states - n_terminal :] = True
    return TabularCMDP(P, rng.standard_normal(n_states), rng.uniform(0, 1, n_states), gamma, 0, terminal)
