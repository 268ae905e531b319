"""Trust-region steps, the safety-biased mixing rule and the line search.

The production update is: natural-gradient steps for reward ascent and
cost descent (each scaled onto the KL ellipsoid), mixed with the smallest
weight ``mu`` on the cost step that still secures a fraction ``beta`` of
the best first-order cost decrease.  :func:`analytic_qp` solves the same
two-constraint QP exactly and exists as an oracle for small dense
problems.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateInstance, InputError, NumericalError


@dataclass(frozen=True)
class TrustStepConfig:
    eps_kl: float = 0.01
    cg_iters: int = 50
    cg_tol: float = 1e-10
    tikhonov: float = 0.02
    beta: float = 0.75
    eps_div: float = 1e-8
    max_backtracks: int = 100
    step_fraction: float = 0.8

    def __post_init__(self):
        if not self.eps_kl > 0:
            raise InputError("eps_kl must be > 0")
        if self.cg_iters < 1:
            raise InputError("cg_iters must be >= 1")
        if self.cg_tol < 0 or self.tikhonov < 0 or self.eps_div < 0:
            raise InputError("cg_tol, tikhonov and eps_div must be >= 0")
        if not 0 < self.beta <= 1:
            raise InputError("beta must lie in (0, 1]")
        if self.max_backtracks < 1:
            raise InputError("max_backtracks must be >= 1")
        if not 0 < self.step_fraction < 1:
            raise InputError("step_fraction must lie in (0, 1)")


class Direction(str, enum.Enum):
    ASCENT = "ascent"
    DESCENT = "descent"


def conjugate_gradient(fvp: Callable, g, max_iters: int = 50, tol: float = 1e-10) -> np.ndarray:
    """Approximately solve ``fvp(x) = g`` for a symmetric positive definite operator.

    Stops once the residual norm is at most ``tol * max(1, |g|)`` or after
    ``max_iters`` iterations.
    """
    g = np.asarray(g, dtype=float)
    x = np.zeros_like(g)
    r = g.copy()
    p = r.copy()
    rr = float(r @ r)
    threshold = tol * max(1.0, math.sqrt(rr))
    if math.sqrt(rr) <= threshold:
        return x
    for _ in range(max_iters):
        Ap = fvp(p)
        pAp = float(p @ Ap)
        if not math.isfinite(pAp) or pAp <= 0:
            raise NumericalError(f"conjugate gradient hit non-positive curvature p.Ap={pAp}")
        alpha = rr / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rr_new = float(r @ r)
        if not math.isfinite(rr_new):
            raise NumericalError("conjugate gradient residual became non-finite")
        if math.sqrt(rr_new) <= threshold:
            break
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x


def trust_region_step(fvp: Callable, g, eps_kl: float, cfg: TrustStepConfig, direction: Direction) -> np.ndarray:
    """Maximise (ascent) or minimise (descent) <g, d> subject to d'Fd/2 <= eps_kl."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NumericalError("gradient contains non-finite entries")
    if not np.any(g):
        return np.zeros_like(g)
    x = conjugate_gradient(fvp, g, cfg.cg_iters, cfg.cg_tol)
    gx = float(g @ x)
    if not math.isfinite(gx) or gx <= 0:
        raise NumericalError(f"natural gradient has non-positive curvature g.x={gx}")
    sign = 1.0 if Direction(direction) is Direction.ASCENT else -1.0
    return sign * math.sqrt(2.0 * eps_kl / gx) * x


@dataclass
class MixResult:
    mu: float
    delta: np.ndarray
    eps: float
    gc_dot_delta_r: float
    gc_dot_delta_c: float
    gc_dot_delta: float
    gr_dot_delta: float | None = None


def safety_bias_mix(g_c, delta_r, delta_c, cfg: TrustStepConfig, g_r=None) -> MixResult:
    """Convex combination (1 - mu) * delta_r + mu * delta_c meeting the cost demand.

    ``eps = -beta * <g_c, delta_c>`` and
    ``mu = max(0, (<g_c, delta_r> + eps) / (<g_c, delta_r> - <g_c, delta_c> + eps_div))``,
    clamped to at most 1.  When the denominator is not positive the rule
    falls back to ``mu = 0``.
    """
    g_c = np.asarray(g_c, dtype=float)
    delta_r = np.asarray(delta_r, dtype=float)
    delta_c = np.asarray(delta_c, dtype=float)
    gcr = float(g_c @ delta_r)
    gcc = float(g_c @ delta_c)
    eps = -cfg.beta * gcc + 0.0
    num = gcr + eps
    den = gcr - gcc + cfg.eps_div
    mu = 0.0 if num <= 0 or den <= 0 else min(1.0, num / den)
    delta = (1.0 - mu) * delta_r + mu * delta_c
    return MixResult(
        mu=mu,
        delta=delta,
        eps=eps,
        gc_dot_delta_r=gcr,
        gc_dot_delta_c=gcc,
        gc_dot_delta=float(g_c @ delta),
        gr_dot_delta=None if g_r is None else float(np.asarray(g_r, dtype=float) @ delta),
    )


def analytic_qp(g_r, g_c, F, eps: float, eps_kl: float, parallel_tol: float = 1e-10) -> np.ndarray:
    """Exact maximiser of <g_r, d> s.t. <g_c, d> <= -eps and d'Fd/2 <= eps_kl.

    Non-degenerate case only (non-zero, non-parallel gradients, F positive
    definite); anything else raises DegenerateInstance.
    """
    g_r = np.asarray(g_r, dtype=float)
    g_c = np.asarray(g_c, dtype=float)
    F = np.asarray(F, dtype=float)
    if not np.any(g_r) or not np.any(g_c):
        raise DegenerateInstance("zero gradient")
    try:
        chol = np.linalg.cholesky(F)
    except np.linalg.LinAlgError as exc:
        raise DegenerateInstance("F is not positive definite") from exc

    def solve(v):
        return np.linalg.solve(chol.T, np.linalg.solve(chol, v))

    x_r = solve(g_r)
    x_c = solve(g_c)
    a = float(g_r @ x_r)
    b = float(g_r @ x_c)
    c = float(g_c @ x_c)
    if a * c - b * b <= parallel_tol * a * c:
        raise DegenerateInstance("g_r and g_c are parallel in the F^-1 metric")

    scale0 = math.sqrt(2.0 * eps_kl / a)
    if scale0 * b <= -eps:
        return scale0 * x_r
    # the largest achievable decrease is sqrt(2 eps_kl c), attained only by the pure cost step
    best = 2.0 * eps_kl * c
    if eps * eps > best * (1.0 + 1e-12):
        raise DegenerateInstance("cost demand exceeds the largest decrease inside the trust region")
    if eps * eps >= best * (1.0 - 1e-12):
        return -math.sqrt(2.0 * eps_kl / c) * x_c

    A = 2.0 * eps_kl * c * c - eps * eps * c
    B = -4.0 * eps_kl * b * c + 2.0 * eps * eps * b
    C = 2.0 * eps_kl * b * b - eps * eps * a
    if abs(A) <= 1e-300:
        roots = [-C / B] if B != 0 else []
    else:
        disc = B * B - 4.0 * A * C
        if disc < 0:
            disc = 0.0 if disc > -1e-12 * B * B else disc
        if disc < 0:
            raise DegenerateInstance("KKT quadratic has no real root")
        sq = math.sqrt(disc)
        # numerically stable pair of roots
        q = -0.5 * (B + math.copysign(sq, B)) if B != 0 else -0.5 * sq
        roots = [q / A, C / q] if q != 0 else [0.0]
    # squaring admits spurious roots; keep those where <g_c, d(lambda)> is negative
    valid = [lam for lam in roots if lam > 0 and b - lam * c < 0]
    if not valid:
        raise DegenerateInstance("no positive multiplier satisfies the linear constraint")
    lam = min(valid, key=lambda l: abs(math.sqrt(2.0 * eps_kl / (a - 2 * l * b + l * l * c)) * (b - l * c) + eps))
    q_form = a - 2.0 * lam * b + lam * lam * c
    return math.sqrt(2.0 * eps_kl / q_form) * (x_r - lam * x_c)


@dataclass
class LineSearchResult:
    accepted: bool
    alpha: float
    attempts: int
    kl: float | None = None
    cost_surrogate: float | None = None


def line_search(kl_eval: Callable[[float], float], cost_surr_eval: Callable[[float], float], cfg: TrustStepConfig) -> LineSearchResult:
    """Geometric backtracking alpha = 1, f, f^2, ... over ``max_backtracks`` attempts.

    Accepts the first alpha with ``kl_eval(alpha) <= eps_kl`` and
    ``cost_surr_eval(alpha) <= cost_surr_eval(0)``.  A NumericalError
    from an evaluator rejects that alpha.
    """
    reference = cost_surr_eval(0.0)
    alpha = 1.0
    for attempt in range(1, cfg.max_backtracks + 1):
        try:
            kl = kl_eval(alpha)
            if kl <= cfg.eps_kl:
                cost = cost_surr_eval(alpha)
                if cost <= reference:
                    return LineSearchResult(True, alpha, attempt, kl, cost)
        except NumericalError:
            pass
        alpha *= cfg.step_fraction
    return LineSearchResult(False, 0.0, cfg.max_backtracks)
