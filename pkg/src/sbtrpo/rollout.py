"""On-policy batch collection with critic-free Monte Carlo returns.

A batch is laid out env-major: all steps of worker 0, then worker 1, and
so on, so its contents do not depend on how the workers were scheduled.
Within a worker the steps are cut into *segments* at episode ends and at
the end of the batch; returns are computed per segment and bootstrap 0
wherever a segment stops without reaching a terminal state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .policy import PolicySpec, act_distribution


@dataclass
class EpisodeStats:
    ret: float  # undiscounted return R_i
    cost: float  # undiscounted total cost C_i
    length: int


@dataclass
class Metrics:
    safety_probability: float
    safe_reward: float
    mean_reward: float
    mean_cost: float
    n_episodes: int


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    costs: np.ndarray
    log_prob_old: np.ndarray
    episode_boundaries: np.ndarray  # start index of every segment
    ret_r: np.ndarray
    ret_c: np.ndarray
    adv_r: np.ndarray
    adv_c: np.ndarray

    @property
    def n(self) -> int:
        return self.rewards.shape[0]

    def segments(self):
        ends = list(self.episode_boundaries[1:]) + [self.n]
        return list(zip(self.episode_boundaries, ends))


def mc_returns(x, gamma: float) -> np.ndarray:
    """Discounted returns-to-go: G_t = x_t + gamma * G_{t+1}, G past the end = 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    acc = 0.0
    for t in range(x.shape[0] - 1, -1, -1):
        acc = x[t] + gamma * acc
        out[t] = acc
    return out


def advantages(batch: Batch, whiten: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Mean-centred returns; reward advantages optionally divided by (std + 1e-8).

    Cost advantages are only centred, never rescaled.
    """
    adv_r = batch.ret_r - batch.ret_r.mean()
    adv_c = batch.ret_c - batch.ret_c.mean()
    if whiten:
        adv_r = adv_r / (adv_r.std() + 1e-8)
    return adv_r, adv_c


def episode_metrics(stats) -> Metrics:
    stats = list(stats)
    if not stats:
        raise InputError("episode_metrics needs at least one completed episode")
    R = np.array([s.ret for s in stats])
    C = np.array([s.cost for s in stats])
    safe = C == 0
    return Metrics(
        safety_probability=float(np.mean(safe)),
        safe_reward=float(np.mean(np.where(safe, R, 0.0))),
        mean_reward=float(R.mean()),
        mean_cost=float(C.mean()),
        n_episodes=len(stats),
    )


def _sample(dist, rngs, spec: PolicySpec) -> np.ndarray:
    if spec.discrete:
        cum = np.cumsum(dist.probs, axis=1)
        u = np.array([rng.random() for rng in rngs])
        return np.minimum((cum < u[:, None]).sum(axis=1), spec.act_dim - 1)
    noise = np.stack([rng.standard_normal(spec.act_dim) for rng in rngs])
    return dist.mean + dist.std * noise


def collect(envs, params, spec: PolicySpec, n_steps: int, seed: int, gamma: float = 0.99, whiten_reward: bool = True):
    """Run ``len(envs)`` workers in lockstep for ``n_steps`` transitions in total.

    Returns ``(batch, episodes)`` where ``episodes`` lists the episodes
    that completed inside this batch, ordered by worker then time.
    Each worker draws actions and reset seeds from its own stream spawned
    from ``seed``.
    """
    n_envs = len(envs)
    if n_envs == 0 or n_steps % n_envs:
        raise InputError(f"n_steps={n_steps} must be a positive multiple of the number of envs ({n_envs})")
    T = n_steps // n_envs
    streams = [s.spawn(2) for s in np.random.SeedSequence(seed).spawn(n_envs)]
    act_rngs = [np.random.default_rng(a) for a, _ in streams]
    reset_rngs = [np.random.default_rng(r) for _, r in streams]

    def reset(i):
        return envs[i].reset(int(reset_rngs[i].integers(2**32)))

    obs = np.stack([reset(i) for i in range(n_envs)])
    obs_buf = np.empty((n_envs, T, spec.obs_dim))
    act_buf = np.empty((n_envs, T), dtype=np.int64) if spec.discrete else np.empty((n_envs, T, spec.act_dim))
    rew_buf = np.empty((n_envs, T))
    cost_buf = np.empty((n_envs, T))
    lp_buf = np.empty((n_envs, T))
    end_buf = np.zeros((n_envs, T), dtype=bool)
    episodes = [[] for _ in range(n_envs)]
    run_r = np.zeros(n_envs)
    run_c = np.zeros(n_envs)
    run_len = np.zeros(n_envs, dtype=int)

    for t in range(T):
        dist = act_distribution(params, spec, obs)
        actions = _sample(dist, act_rngs, spec)
        obs_buf[:, t] = obs
        act_buf[:, t] = actions
        lp_buf[:, t] = dist.log_prob(actions)
        nxt = np.empty_like(obs)
        for i, env in enumerate(envs):
            out = env.step(actions[i])
            rew_buf[i, t] = out.reward
            cost_buf[i, t] = out.cost
            run_r[i] += out.reward
            run_c[i] += out.cost
            run_len[i] += 1
            if out.done or out.truncated:
                end_buf[i, t] = True
                episodes[i].append(EpisodeStats(float(run_r[i]), float(run_c[i]), int(run_len[i])))
                run_r[i] = run_c[i] = 0.0
                run_len[i] = 0
                nxt[i] = reset(i)
            else:
                nxt[i] = out.obs
        obs = nxt

    starts = []
    for i in range(n_envs):
        starts.append(i * T)
        starts.extend(i * T + t + 1 for t in np.flatnonzero(end_buf[i, :-1]))
    starts = np.array(starts, dtype=np.int64)

    rewards = rew_buf.reshape(-1)
    costs = cost_buf.reshape(-1)
    ret_r = np.empty(n_steps)
    ret_c = np.empty(n_steps)
    for a, b in zip(starts, list(starts[1:]) + [n_steps]):
        ret_r[a:b] = mc_returns(rewards[a:b], gamma)
        ret_c[a:b] = mc_returns(costs[a:b], gamma)

    batch = Batch(
        obs=obs_buf.reshape(n_steps, spec.obs_dim),
        actions=act_buf.reshape(n_steps) if spec.discrete else act_buf.reshape(n_steps, spec.act_dim),
        rewards=rewards,
        costs=costs,
        log_prob_old=lp_buf.reshape(-1),
        episode_boundaries=starts,
        ret_r=ret_r,
        ret_c=ret_c,
        adv_r=np.zeros(n_steps),
        adv_c=np.zeros(n_steps),
    )
    batch.adv_r, batch.adv_c = advantages(batch, whiten_reward)
    return batch, [ep for per_env in episodes for ep in per_env]
