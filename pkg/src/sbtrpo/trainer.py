"""The SB-TRPO epoch loop, run logging and update-angle diagnostics."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .envs import HazardGrid, PointCircle2D, PointGoal2D, TabularEnv, exact_policy_eval
from .errors import NumericalError, RunError
from .estimators import Signal, estimate_gradients, surrogate_value
from .policy import FisherOperator, Head, PolicySpec, act_distribution, kl_mean, policy_init
from .rollout import collect, episode_metrics
from .trust import Direction, line_search, safety_bias_mix, trust_region_step

log = logging.getLogger(__name__)

CSV_HEADER = (
    "epoch",
    "mean_reward",
    "mean_cost",
    "safety_prob",
    "safe_reward",
    "mu",
    "eps",
    "alpha",
    "accepted",
    "kl_after",
    "angle_gr_deg",
    "angle_gc_deg",
)
METRICS_WINDOW = 50


@dataclass
class StepReport:
    epoch: int
    mean_reward: float = math.nan
    mean_cost: float = math.nan
    safety_probability: float = math.nan
    safe_reward: float = math.nan
    mu: float = math.nan
    eps: float = math.nan
    alpha: float = 0.0
    accepted: bool = False
    kl_after: float = math.nan
    gr_dot_delta: float = math.nan
    gc_dot_delta: float = math.nan
    gc_dot_delta_c: float = math.nan
    cost_surr_before: float = math.nan
    cost_surr_after: float = math.nan
    angle_delta_gr_deg: float = math.nan
    angle_delta_gc_deg: float = math.nan
    error: str = ""

    def csv_row(self) -> list[str]:
        return [
            str(self.epoch),
            fmt(self.mean_reward),
            fmt(self.mean_cost),
            fmt(self.safety_probability),
            fmt(self.safe_reward),
            fmt(self.mu),
            fmt(self.eps),
            fmt(self.alpha),
            "1" if self.accepted else "0",
            fmt(self.kl_after),
            fmt(self.angle_delta_gr_deg),
            fmt(self.angle_delta_gc_deg),
        ]


@dataclass
class RunLog:
    reports: list[StepReport] = field(default_factory=list)
    params: np.ndarray | None = None
    spec: PolicySpec | None = None


def fmt(x: float) -> str:
    """17 significant digits; NaN (undefined) becomes an empty field."""
    return "" if x is None or math.isnan(x) else f"{x:.17g}"


def angle_diagnostics(delta, g_r, g_c) -> tuple[float, float]:
    """Angles in degrees between the update and each gradient; NaN for zero vectors."""

    def angle(u, v):
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0 or nv == 0 or not (math.isfinite(nu) and math.isfinite(nv)):
            return math.nan
        # Kahan's form stays accurate near 0 and 180 degrees, unlike acos
        a, b = u / nu, v / nv
        return math.degrees(2.0 * math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))

    delta = np.asarray(delta, dtype=float)
    return angle(delta, np.asarray(g_r, dtype=float)), angle(delta, np.asarray(g_c, dtype=float))


def make_env(cfg: TrainConfig):
    if cfg.env == "hazard_grid":
        if cfg.layout:
            return HazardGrid.from_file(cfg.layout, gamma=cfg.gamma, episode_cap=cfg.episode_cap)
        return HazardGrid(gamma=cfg.gamma, episode_cap=cfg.episode_cap)
    if cfg.env == "point_goal":
        return PointGoal2D(horizon=cfg.horizon)
    return PointCircle2D(horizon=cfg.horizon)


def make_spec(env, hidden_sizes) -> PolicySpec:
    head = Head.CATEGORICAL if env.discrete else Head.GAUSSIAN
    return PolicySpec(env.obs_dim, env.act_dim, tuple(hidden_sizes), head)


def induced_policy_table(params, spec: PolicySpec, env: TabularEnv) -> np.ndarray:
    """Action probabilities of the network at every one-hot state."""
    return act_distribution(params, spec, np.eye(env.cmdp.n_states)).probs


def exact_returns(params, spec: PolicySpec, env: TabularEnv) -> tuple[float, float]:
    return exact_policy_eval(env.cmdp, induced_policy_table(params, spec, env))


def sbtrpo_epoch(params, envs, spec: PolicySpec, cfg: TrainConfig, epoch: int, window=None):
    """One collect / estimate / trust-step / line-search update.

    Returns ``(new_params, report, episodes)``.  Any NumericalError aborts
    the update: parameters come back unchanged with ``accepted=False``.
    """
    tcfg = cfg.trust()
    report = StepReport(epoch)
    seed = np.random.SeedSequence([cfg.seed, epoch]).generate_state(1)[0]
    batch, episodes = collect(envs, params, spec, cfg.steps_per_epoch, int(seed), cfg.gamma, cfg.whiten_reward_adv)

    if window is None:
        window = deque(maxlen=METRICS_WINDOW)
    window.extend(episodes)
    if window:
        m = episode_metrics(window)
        report.mean_reward = m.mean_reward
        report.mean_cost = m.mean_cost
        report.safety_probability = m.safety_probability
        report.safe_reward = m.safe_reward

    try:
        grads = estimate_gradients(batch, params, spec)
        fvp = FisherOperator(params, spec, batch.obs, batch.actions, damping=tcfg.tikhonov)
        delta_r = trust_region_step(fvp, grads.g_r, tcfg.eps_kl, tcfg, Direction.ASCENT)
        delta_c = trust_region_step(fvp, grads.g_c, tcfg.eps_kl, tcfg, Direction.DESCENT)
        mix = safety_bias_mix(grads.g_c, delta_r, delta_c, tcfg, g_r=grads.g_r)
        report.mu = mix.mu
        report.eps = mix.eps
        report.gr_dot_delta = mix.gr_dot_delta
        report.gc_dot_delta = mix.gc_dot_delta
        report.gc_dot_delta_c = mix.gc_dot_delta_c
        report.angle_delta_gr_deg, report.angle_delta_gc_deg = angle_diagnostics(mix.delta, grads.g_r, grads.g_c)

        def kl_eval(alpha):
            return kl_mean(params, params + alpha * mix.delta, spec, batch.obs)

        def cost_eval(alpha):
            return surrogate_value(batch, params + alpha * mix.delta, spec, Signal.COST)

        result = line_search(kl_eval, cost_eval, tcfg)
    except NumericalError as exc:
        report.error = str(exc)
        log.warning("epoch %d aborted: %s", epoch, exc)
        return params, report, episodes

    report.accepted = result.accepted
    if not result.accepted:
        report.kl_after = 0.0
        return params, report, episodes
    report.alpha = result.alpha
    report.kl_after = result.kl
    report.cost_surr_before = cost_eval(0.0)
    report.cost_surr_after = result.cost_surrogate
    return params + result.alpha * mix.delta, report, episodes


def train(cfg: TrainConfig, log_path=None) -> RunLog:
    """Run ``cfg.epochs`` epochs; one CSV row is written and flushed per epoch."""
    env0 = make_env(cfg)
    envs = [env0] + [make_env(cfg) for _ in range(cfg.n_envs - 1)]
    spec = make_spec(env0, cfg.hidden_sizes)
    params = policy_init(spec, cfg.seed)
    run = RunLog(params=params, spec=spec)
    window = deque(maxlen=METRICS_WINDOW)
    path = log_path or cfg.log_path or None
    handle = None
    try:
        if path:
            handle = open(path, "w", newline="")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            handle.flush()
        for epoch in range(cfg.epochs):
            params, report, _ = sbtrpo_epoch(params, envs, spec, cfg, epoch, window)
            run.reports.append(report)
            run.params = params
            if handle:
                writer.writerow(report.csv_row())
                handle.flush()
            log.info(
                "epoch %d  R=%.4g C=%.4g mu=%.3g alpha=%.3g accepted=%s",
                epoch, report.mean_reward, report.mean_cost, report.mu, report.alpha, report.accepted,
            )
    except OSError as exc:
        raise RunError(f"I/O failure while logging to {path}: {exc}", partial=run) from exc
    finally:
        if handle:
            handle.close()
    return run


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def read_log(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
