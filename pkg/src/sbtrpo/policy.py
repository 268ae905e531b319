"""Stochastic MLP policies over a flat parameter vector.

Parameters are laid out layer by layer as ``W1, b1, W2, b2, ..., W_out,
b_out`` (each weight matrix stored row-major with shape ``(fan_in,
fan_out)``), followed by ``act_dim`` state-independent log standard
deviations when the head is diagonal Gaussian.  Hidden layers use tanh,
the output layer is linear.  Every gradient is derived by hand; there is
no autodiff dependency.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

LOG_2PI = math.log(2.0 * math.pi)


class Head(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class PolicySpec:
    obs_dim: int
    act_dim: int
    hidden_sizes: tuple[int, ...] = (64, 64)
    head: Head = Head.GAUSSIAN
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        object.__setattr__(self, "head", Head(self.head))
        if self.obs_dim < 1 or self.act_dim < 1:
            raise InputError("obs_dim and act_dim must be >= 1")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise InputError("hidden_sizes must be non-empty with entries >= 1")
        if self.activation != "tanh":
            raise InputError(f"unsupported activation: {self.activation}")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        sizes = [self.obs_dim, *self.hidden_sizes, self.act_dim]
        return list(zip(sizes[:-1], sizes[1:]))

    @property
    def discrete(self) -> bool:
        return self.head is Head.CATEGORICAL

    @property
    def n_params(self) -> int:
        n = sum(i * o + o for i, o in self.layer_shapes)
        if self.head is Head.GAUSSIAN:
            n += self.act_dim
        return n


@dataclass
class ActionDistribution:
    """Action distribution(s) for one observation or a batch of them.

    Gaussian heads fill ``mean``/``log_std``; categorical heads fill
    ``logits``.  Leading axes are batch axes.
    """

    head: Head
    mean: np.ndarray | None = None
    log_std: np.ndarray | None = None
    logits: np.ndarray | None = None
    _log_probs: np.ndarray | None = field(default=None, repr=False)

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    @property
    def log_probs(self) -> np.ndarray:
        """Categorical log-probabilities, normalised with log-sum-exp."""
        if self._log_probs is None:
            m = self.logits.max(axis=-1, keepdims=True)
            lse = m + np.log(np.exp(self.logits - m).sum(axis=-1, keepdims=True))
            self._log_probs = self.logits - lse
        return self._log_probs

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.head is Head.GAUSSIAN:
            return self.mean + self.std * rng.standard_normal(self.mean.shape)
        p = self.probs
        if p.ndim == 1:
            return np.asarray(rng.choice(p.shape[0], p=p))
        u = rng.random(p.shape[0])
        idx = (np.cumsum(p, axis=1) < u[:, None]).sum(axis=1)
        return np.minimum(idx, p.shape[1] - 1)

    def log_prob(self, action) -> np.ndarray:
        if self.head is Head.GAUSSIAN:
            z = (np.asarray(action, dtype=float) - self.mean) / self.std
            return np.sum(-0.5 * z * z - self.log_std - 0.5 * LOG_2PI, axis=-1)
        a = np.asarray(action)
        lp = self.log_probs
        if lp.ndim == 1:
            return lp[int(a)]
        return lp[np.arange(lp.shape[0]), a]


def unflatten(params: np.ndarray, spec: PolicySpec):
    """Split a flat vector into ``[(W, b), ...]`` views and the log-std view."""
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise InputError(f"expected {spec.n_params} parameters, got shape {params.shape}")
    layers = []
    k = 0
    for i, o in spec.layer_shapes:
        W = params[k : k + i * o].reshape(i, o)
        k += i * o
        b = params[k : k + o]
        k += o
        layers.append((W, b))
    log_std = params[k:] if spec.head is Head.GAUSSIAN else None
    return layers, log_std


def policy_init(spec: PolicySpec, seed: int) -> np.ndarray:
    """Uniform(+-sqrt(1/fan_in)) weights, zero biases, zero log-stds."""
    rng = np.random.default_rng(seed)
    chunks = []
    for i, o in spec.layer_shapes:
        bound = math.sqrt(1.0 / i)
        chunks.append(rng.uniform(-bound, bound, size=i * o))
        chunks.append(np.zeros(o))
    if spec.head is Head.GAUSSIAN:
        chunks.append(np.zeros(spec.act_dim))
    return np.concatenate(chunks)


def _check_obs(obs, spec: PolicySpec) -> np.ndarray:
    obs = np.asarray(obs, dtype=float)
    if obs.shape[-1:] != (spec.obs_dim,) or obs.ndim not in (1, 2):
        raise InputError(f"observation shape {obs.shape} incompatible with obs_dim={spec.obs_dim}")
    if not np.all(np.isfinite(obs)):
        raise InputError("observation contains non-finite values")
    return obs


def _check_actions(actions, spec: PolicySpec, n: int | None) -> np.ndarray:
    if spec.head is Head.CATEGORICAL:
        a = np.asarray(actions)
        if not np.issubdtype(a.dtype, np.integer):
            if not np.all(np.mod(a, 1) == 0):
                raise InputError("categorical actions must be integer indices")
            a = a.astype(np.int64)
        if np.any(a < 0) or np.any(a >= spec.act_dim):
            raise InputError(f"categorical action out of range [0, {spec.act_dim})")
        expected = () if n is None else (n,)
    else:
        a = np.asarray(actions, dtype=float)
        expected = (spec.act_dim,) if n is None else (n, spec.act_dim)
    if a.shape != expected:
        raise InputError(f"action shape {a.shape} does not match expected {expected}")
    return a


def _forward(params, spec, obs2d):
    """Forward pass keeping per-layer inputs for backprop."""
    layers, log_std = unflatten(params, spec)
    inputs = []
    h = obs2d
    for W, b in layers[:-1]:
        inputs.append(h)
        h = np.tanh(h @ W + b)
    inputs.append(h)
    W, b = layers[-1]
    out = h @ W + b
    return out, log_std, layers, inputs


def _distribution(spec, out, log_std) -> ActionDistribution:
    if spec.head is Head.GAUSSIAN:
        return ActionDistribution(Head.GAUSSIAN, mean=out, log_std=np.broadcast_to(log_std, out.shape))
    return ActionDistribution(Head.CATEGORICAL, logits=out)


def act_distribution(params, spec: PolicySpec, obs) -> ActionDistribution:
    obs = _check_obs(obs, spec)
    single = obs.ndim == 1
    out, log_std, _, _ = _forward(params, spec, obs.reshape(-1, spec.obs_dim))
    if single:
        out = out[0]
    return _distribution(spec, out, log_std)


def log_prob(params, spec: PolicySpec, obs, action):
    """Log-density (Gaussian) or log-mass (categorical) of ``action``.

    Accepts a single observation (returns a float) or a batch (returns an
    array of length N).
    """
    obs = _check_obs(obs, spec)
    n = None if obs.ndim == 1 else obs.shape[0]
    a = _check_actions(action, spec, n)
    lp = act_distribution(params, spec, obs).log_prob(a)
    return float(lp) if n is None else lp


def _head_score(spec, out, log_std, actions):
    """d log pi / d(head outputs) and d log pi / d(log_std), per sample."""
    if spec.head is Head.GAUSSIAN:
        std = np.exp(log_std)
        z = (actions - out) / std
        return z / std, z * z - 1.0
    m = out.max(axis=1, keepdims=True)
    p = np.exp(out - m)
    p /= p.sum(axis=1, keepdims=True)
    d_out = -p
    d_out[np.arange(out.shape[0]), actions] += 1.0
    return d_out, None


def _backprop(spec, layers, inputs, d_out, per_sample: bool):
    """Push head gradients back through the network.

    Returns a list of (dW, db) blocks, either summed over the batch or
    per sample (leading axis N), output layer last.
    """
    blocks = []
    delta = d_out
    for li in range(len(layers) - 1, -1, -1):
        W, _ = layers[li]
        x = inputs[li]
        if per_sample:
            dW = np.einsum("ni,no->nio", x, delta).reshape(x.shape[0], -1)
            db = delta
        else:
            dW = (x.T @ delta).ravel()
            db = delta.sum(axis=0)
        blocks.append((dW, db))
        if li > 0:
            delta = (delta @ W.T) * (1.0 - x * x)
    blocks.reverse()
    return blocks


def score_matrix(params, spec: PolicySpec, obs, actions) -> np.ndarray:
    """Per-sample score vectors grad_theta log pi(a_i|s_i), shape (N, d)."""
    obs = _check_obs(obs, spec).reshape(-1, spec.obs_dim)
    a = _check_actions(actions, spec, obs.shape[0])
    out, log_std, layers, inputs = _forward(params, spec, obs)
    d_out, d_logstd = _head_score(spec, out, log_std, a)
    parts = []
    for dW, db in _backprop(spec, layers, inputs, d_out, per_sample=True):
        parts.extend((dW, db))
    if d_logstd is not None:
        parts.append(d_logstd)
    return np.concatenate(parts, axis=1)


def log_prob_grad(params, spec: PolicySpec, obs, action) -> np.ndarray:
    """Gradient of ``log_prob`` for a single (obs, action) pair."""
    obs = _check_obs(obs, spec)
    if obs.ndim != 1:
        raise InputError("log_prob_grad takes a single observation; use score_matrix for batches")
    a = _check_actions(action, spec, None)
    return score_matrix(params, spec, obs[None, :], np.asarray(a)[None, ...])[0]


def weighted_log_prob_grad(params, spec: PolicySpec, obs, actions, weights) -> np.ndarray:
    """sum_i weights[i] * grad log pi(a_i|s_i) without forming per-sample scores."""
    obs = _check_obs(obs, spec).reshape(-1, spec.obs_dim)
    a = _check_actions(actions, spec, obs.shape[0])
    w = np.asarray(weights, dtype=float)
    if w.shape != (obs.shape[0],):
        raise InputError("weights must have one entry per sample")
    out, log_std, layers, inputs = _forward(params, spec, obs)
    d_out, d_logstd = _head_score(spec, out, log_std, a)
    parts = []
    for dW, db in _backprop(spec, layers, inputs, d_out * w[:, None], per_sample=False):
        parts.extend((dW, db))
    if d_logstd is not None:
        parts.append(w @ d_logstd)
    return np.concatenate(parts)


def kl_mean(params_old, params_new, spec: PolicySpec, obs_batch) -> float:
    """Sample-average KL(pi_old(.|s) || pi_new(.|s)) over ``obs_batch``."""
    obs = _check_obs(obs_batch, spec).reshape(-1, spec.obs_dim)
    if obs.shape[0] == 0:
        raise InputError("kl_mean needs a non-empty observation batch")
    old = act_distribution(params_old, spec, obs)
    new = act_distribution(params_new, spec, obs)
    if spec.head is Head.GAUSSIAN:
        var_old = np.exp(2.0 * old.log_std)
        var_new = np.exp(2.0 * new.log_std)
        kl = np.sum(
            new.log_std - old.log_std + (var_old + (old.mean - new.mean) ** 2) / (2.0 * var_new) - 0.5,
            axis=1,
        )
    else:
        kl = np.sum(old.probs * (old.log_probs - new.log_probs), axis=1)
    return float(np.mean(kl))


def empirical_fisher_product(scores, v, damping: float = 0.0, weights=None) -> np.ndarray:
    """(1/N) sum_i g_i (g_i . v) + damping * v for score rows g_i (optionally weighted)."""
    scores = np.asarray(scores, dtype=float)
    v = np.asarray(v, dtype=float)
    if scores.ndim != 2 or v.shape != (scores.shape[1],):
        raise InputError(f"vector of shape {v.shape} does not match score rows of shape {scores.shape}")
    w = np.full(scores.shape[0], 1.0 / scores.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return scores.T @ (w * (scores @ v)) + damping * v


class FisherOperator:
    """Matrix-free ``v -> (1/N) sum_i g_i (g_i . v) + damping * v``.

    Identical (obs, action) rows are merged with integer multiplicities
    before the scores are formed; the product is unchanged but tabular
    batches shrink from thousands of rows to at most n_states * n_actions.
    """

    def __init__(self, params, spec: PolicySpec, obs, actions, damping: float = 0.0, dedupe: bool = True):
        obs = _check_obs(obs, spec).reshape(-1, spec.obs_dim)
        a = _check_actions(actions, spec, obs.shape[0])
        if damping < 0:
            raise InputError("damping must be non-negative")
        self.n = obs.shape[0]
        self.dim = spec.n_params
        self.damping = float(damping)
        weights = np.ones(self.n)
        if dedupe and self.n > 1:
            key = np.concatenate([obs, np.asarray(a, dtype=float).reshape(self.n, -1)], axis=1)
            key, inverse = np.unique(key, axis=0, return_inverse=True)
            if key.shape[0] < self.n:
                weights = np.bincount(inverse.ravel(), minlength=key.shape[0]).astype(float)
                obs = key[:, : spec.obs_dim]
                a = key[:, spec.obs_dim :]
                a = a[:, 0].astype(np.int64) if spec.discrete else a
        self.scores = score_matrix(params, spec, obs, a)
        self.weights = weights / self.n

    def __call__(self, v) -> np.ndarray:
        return empirical_fisher_product(self.scores, v, self.damping, self.weights)

    def dense(self) -> np.ndarray:
        """Materialise the damped Fisher matrix (small problems and tests only)."""
        return (self.scores.T * self.weights) @ self.scores + self.damping * np.eye(self.dim)


def fisher_vector_product(params, spec: PolicySpec, obs_batch, actions, v, damping: float) -> np.ndarray:
    return FisherOperator(params, spec, obs_batch, actions, damping)(v)
