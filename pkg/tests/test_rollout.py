import numpy as np
import pytest

from helpers import random_cmdp
from sbtrpo.envs import HazardGrid, PointGoal2D, TabularEnv, exact_policy_eval
from sbtrpo.errors import InputError
from sbtrpo.policy import Head, PolicySpec, log_prob, policy_init
from sbtrpo.rollout import Batch, EpisodeStats, advantages, collect, episode_metrics, mc_returns


def returns_batch(ret_r, ret_c=None):
    ret_r = np.asarray(ret_r, dtype=float)
    ret_c = np.zeros_like(ret_r) if ret_c is None else np.asarray(ret_c, dtype=float)
    n = ret_r.size
    z = np.zeros(n)
    return Batch(np.zeros((n, 1)), np.zeros(n, dtype=int), z, z, z, np.array([0]), ret_r, ret_c, z, z)


def grid_setup(n_envs=4, cap=50):
    envs = [HazardGrid(episode_cap=cap) for _ in range(n_envs)]
    spec = PolicySpec(25, 4, (8,), Head.CATEGORICAL)
    return envs, spec, policy_init(spec, 0)


class TestMCReturns:
    def test_hand_recursion(self):
        assert mc_returns([1, 1, 1], 0.5).tolist() == [1.75, 1.5, 1.0]

    def test_gamma_zero(self, rng):
        x = rng.standard_normal(7)
        assert np.array_equal(mc_returns(x, 0.0), x)

    def test_zero_costs(self):
        assert not np.any(mc_returns(np.zeros(5), 0.99))


class TestAdvantages:
    def test_constant_returns(self):
        adv_r, adv_c = advantages(returns_batch(np.full(6, 3.5), np.full(6, 2.0)))
        assert not np.any(adv_r) and not np.any(adv_c)

    def test_whitened_reward_has_unit_std(self, rng):
        adv_r, _ = advantages(returns_batch(rng.standard_normal(50) * 7 + 3))
        assert abs(adv_r.mean()) < 1e-12
        assert adv_r.std() == pytest.approx(1.0, abs=1e-6)

    def test_cost_is_only_centred(self, rng):
        ret_c = rng.uniform(0, 5, 40)
        _, adv_c = advantages(returns_batch(rng.standard_normal(40), ret_c), whiten=True)
        assert np.allclose(adv_c, ret_c - ret_c.mean(), atol=1e-15)

    def test_no_whitening(self, rng):
        ret = rng.standard_normal(10)
        adv_r, _ = advantages(returns_batch(ret), whiten=False)
        assert np.allclose(adv_r, ret - ret.mean(), atol=1e-15)

    def test_single_sample(self):
        adv_r, adv_c = advantages(returns_batch([4.0], [1.0]))
        assert adv_r.tolist() == [0.0] and adv_c.tolist() == [0.0]


class TestMetrics:
    def test_mixed(self):
        m = episode_metrics([EpisodeStats(1, 0, 3), EpisodeStats(2, 3, 3), EpisodeStats(3, 0, 3)])
        assert m.safety_probability == pytest.approx(2 / 3)
        assert m.safe_reward == pytest.approx(4 / 3)
        assert m.mean_reward == pytest.approx(2.0) and m.mean_cost == pytest.approx(1.0)

    def test_all_safe(self):
        m = episode_metrics([EpisodeStats(1, 0, 1), EpisodeStats(4, 0, 1)])
        assert m.safety_probability == 1.0 and m.safe_reward == m.mean_reward == 2.5

    def test_all_unsafe(self):
        m = episode_metrics([EpisodeStats(1, 1, 1), EpisodeStats(4, 2, 1)])
        assert m.safety_probability == 0.0 and m.safe_reward == 0.0

    def test_empty(self):
        with pytest.raises(InputError):
            episode_metrics([])


class TestCollect:
    def test_batch_size_and_layout(self):
        envs, spec, params = grid_setup()
        batch, _ = collect(envs, params, spec, 100, seed=0)
        assert batch.n == 100 and batch.obs.shape == (100, 25) and batch.actions.shape == (100,)
        assert {0, 25, 50, 75} <= set(batch.episode_boundaries.tolist())

    def test_indivisible_steps(self):
        envs, spec, params = grid_setup()
        with pytest.raises(InputError):
            collect(envs, params, spec, 10, seed=0)

    def test_deterministic(self):
        envs, spec, params = grid_setup()
        a, ea = collect(envs, params, spec, 200, seed=5)
        b, eb = collect(grid_setup()[0], params, spec, 200, seed=5)
        for field in ("obs", "actions", "rewards", "costs", "log_prob_old", "ret_r", "adv_r", "adv_c"):
            assert getattr(a, field).tobytes() == getattr(b, field).tobytes()
        assert ea == eb

    def test_deterministic_continuous(self):
        spec = PolicySpec(4, 2, (8,), Head.GAUSSIAN)
        params = policy_init(spec, 1)
        a, _ = collect([PointGoal2D() for _ in range(2)], params, spec, 120, seed=3)
        b, _ = collect([PointGoal2D() for _ in range(2)], params, spec, 120, seed=3)
        assert a.actions.tobytes() == b.actions.tobytes() and a.obs.tobytes() == b.obs.tobytes()

    def test_log_prob_old_consistent(self):
        envs, spec, _ = grid_setup()
        params = np.random.default_rng(3).standard_normal(spec.n_params)
        batch, _ = collect(envs, params, spec, 200, seed=1)
        assert np.max(np.abs(log_prob(params, spec, batch.obs, batch.actions) - batch.log_prob_old)) <= 1e-12

    def test_return_recursion_within_segments(self):
        envs, spec, params = grid_setup(cap=7)
        batch, _ = collect(envs, params, spec, 200, seed=2, gamma=0.9)
        for a, b in batch.segments():
            r, g = batch.rewards[a:b], batch.ret_r[a:b]
            assert g[-1] == r[-1]
            assert np.allclose(g[:-1], r[:-1] + 0.9 * g[1:], atol=1e-15)

    def test_episode_bookkeeping_conserves_totals(self):
        # cap 5 < shortest path to the goal: every episode is exactly 5 steps
        envs, spec, params = grid_setup(n_envs=2, cap=5)
        batch, episodes = collect(envs, params, spec, 100, seed=4)
        segs = batch.segments()
        assert len(segs) == len(episodes) == 20
        for (a, b), ep in zip(segs, episodes):
            assert ep.length == b - a
            assert ep.ret == pytest.approx(batch.rewards[a:b].sum(), abs=1e-12)
            assert ep.cost == pytest.approx(batch.costs[a:b].sum(), abs=1e-12)
            assert ep.cost >= 0

    def test_partial_episodes_not_counted(self):
        envs, spec, params = grid_setup(n_envs=1, cap=None)
        _, episodes = collect(envs, params, spec, 3, seed=0)
        assert episodes == []

    def test_start_returns_converge_to_exact_value(self):
        rng = np.random.default_rng(21)
        cmdp = random_cmdp(rng, n_states=6, n_actions=3, gamma=0.9, n_terminal=2)
        spec = PolicySpec(6, 3, (4,), Head.CATEGORICAL)
        params = np.zeros(spec.n_params)  # uniform policy
        n_envs, n_steps = 4, 100_000
        batch, _ = collect([TabularEnv(cmdp) for _ in range(n_envs)], params, spec, n_steps, seed=8, gamma=0.9)
        T = n_steps // n_envs
        block_ends = {T * (i + 1) for i in range(n_envs)}
        # drop the last segment of every worker: it may be cut by the batch end
        starts = [a for a, b in batch.segments() if b not in block_ends]
        est = batch.ret_r[starts]
        j_r, _ = exact_policy_eval(cmdp, np.full((6, 3), 1 / 3))
        se = est.std(ddof=1) / np.sqrt(est.size)
        assert est.size > 5000
        assert abs(est.mean() - j_r) < 3 * se
