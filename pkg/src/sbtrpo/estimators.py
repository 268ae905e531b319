"""Sampled surrogate objectives and their policy gradients."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .policy import PolicySpec, log_prob, weighted_log_prob_grad
from .rollout import Batch

MAX_LOG_RATIO = 30.0


class Signal(str, enum.Enum):
    REWARD = "reward"
    COST = "cost"


def _adv(batch: Batch, signal: Signal) -> np.ndarray:
    return batch.adv_r if Signal(signal) is Signal.REWARD else batch.adv_c


@dataclass
class GradientEstimate:
    g_r: np.ndarray
    g_c: np.ndarray
    batch: Batch


def surrogate_grad(batch: Batch, params, spec: PolicySpec, signal: Signal) -> np.ndarray:
    """(1/N) sum_t grad log pi(a_t|s_t) * A_t, evaluated at ``params``."""
    return weighted_log_prob_grad(params, spec, batch.obs, batch.actions, _adv(batch, signal) / batch.n)


def estimate_gradients(batch: Batch, params, spec: PolicySpec) -> GradientEstimate:
    return GradientEstimate(
        surrogate_grad(batch, params, spec, Signal.REWARD),
        surrogate_grad(batch, params, spec, Signal.COST),
        batch,
    )


def surrogate_value(batch: Batch, params, spec: PolicySpec, signal: Signal) -> float:
    """(1/N) sum_t [pi_params(a_t|s_t) / pi_old(a_t|s_t)] * A_t.

    The old log-probabilities are the ones recorded in the batch.  The
    constant J(theta_old) offset is omitted.
    """
    log_ratio = log_prob(params, spec, batch.obs, batch.actions) - batch.log_prob_old
    if not np.all(np.isfinite(log_ratio)) or log_ratio.max() > MAX_LOG_RATIO:
        raise NumericalError("importance ratio overflow: probe is far outside the trust region")
    return float(np.mean(np.exp(log_ratio) * _adv(batch, signal)))
