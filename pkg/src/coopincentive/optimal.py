"""Optimal constant incentive protocols and their cumulative cost.

The institution pays ``(k N p_i mu)^2 / 2`` per unit time, with ``p_i`` the
cooperator fraction under reward and the defector fraction under
punishment, until the cooperator fraction first reaches ``1 - delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .game import IncentiveKind
from .meanfield import (
    ModelParams,
    UpdateRule,
    beta,
    cooperation_threshold,
    drift_rate,
    drift_slope,
    hitting_time,
    rk4_step,
)

KINDS = (IncentiveKind.REWARD, IncentiveKind.PUNISH)


class NoInteriorOptimum(ValueError):
    """Cooperation is already favoured, so any mu >= 0 sustains it."""


class UnreachableTarget(ValueError):
    """The protocol does not drive the population to the target level."""


@dataclass(frozen=True)
class Target:
    p0: float = 0.5
    delta: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.p0 < 1.0:
            raise ValueError(f"p0 must lie in (0, 1), got {self.p0}")
        if not 0.0 <= self.delta < 1.0 - self.p0:
            raise ValueError(f"need 0 <= delta < 1 - p0, got p0={self.p0}, delta={self.delta}")

    @property
    def level(self) -> float:
        return 1.0 - self.delta


def _kind(kind) -> IncentiveKind:
    kind = IncentiveKind(kind)
    if kind is IncentiveKind.NONE:
        raise ValueError("incentive kind must be reward or punish")
    return kind


def optimal_mu(rule: UpdateRule, params: ModelParams) -> float:
    """Cost-minimising constant incentive, identical for reward and punishment."""
    rule = UpdateRule.parse(rule)
    b, c, k = params.game.b, params.game.c, params.k
    if rule is UpdateRule.DB:
        if b / c >= k:
            raise NoInteriorOptimum(f"b/c = {b / c:g} >= k = {k}: DB favours cooperation without incentives")
        return 2 * (c * k - b) / k
    if rule is UpdateRule.IM:
        if b / c >= k + 2:
            raise NoInteriorOptimum(f"b/c = {b / c:g} >= k+2 = {k + 2}: IM favours cooperation without incentives")
        return 2 * (c * (k + 2) - b) / (k + 2)
    return 2 * c


def cost_bracket(kind, target: Target) -> float:
    p0, d = target.p0, target.delta
    if _kind(kind) is IncentiveKind.REWARD:
        return math.inf if d == 0 else p0 + d - 1 + math.log((1 - p0) / d)
    return p0 + d - 1 + math.log((1 - d) / p0)


def cost_closed_form(rule: UpdateRule, kind, params: ModelParams, target: Target) -> float:
    """Cumulative cost J* of the optimal protocol."""
    mu = optimal_mu(rule, params)
    scale = (params.k * params.n * mu) ** 2 / (2 * beta(rule, params))
    return scale * cost_bracket(kind, target)


def cost_difference(rule: UpdateRule, params: ModelParams, target: Target) -> float:
    """J_R* - J_P*; positive means punishment is the cheaper option."""
    mu = optimal_mu(rule, params)
    p0, d = target.p0, target.delta
    scale = (params.k * params.n * mu) ** 2 / (2 * beta(rule, params))
    if d == 0:
        return math.inf
    return scale * math.log(p0 * (1 - p0) / (d * (1 - d)))


def _reachable_rate(rule, mu, params):
    a = drift_rate(rule, mu, params)
    if np.any(np.asarray(a) <= 0):
        thr = cooperation_threshold(rule, params)
        raise UnreachableTarget(f"mu must exceed the {UpdateRule.parse(rule).name} threshold {thr:g}")
    return a


def cost_constant(rule: UpdateRule, kind, mu, params: ModelParams, target: Target):
    """Analytic cost of holding the incentive fixed at ``mu`` (scalar or array)."""
    a = _reachable_rate(rule, mu, params)
    return (params.k * params.n * np.asarray(mu, dtype=float)) ** 2 / (2 * a) * cost_bracket(kind, target)


def cost_quadrature(rule: UpdateRule, kind, mu, params: ModelParams, target: Target,
                    dt: float | None = None, rate_step: float = 2e-4) -> np.ndarray:
    """Numerical cost: RK4 trajectory plus trapezoidal rule, vectorised over ``mu``.

    By default each protocol steps by ``rate_step / a(mu)``, i.e. a fixed
    step in rescaled time ``a*t``, so slow protocols near the threshold do
    not need millions of steps; pass ``dt`` for a fixed time step instead.
    The final step is shortened to land on the target level.
    """
    kind = _kind(kind)
    mus = np.atleast_1d(np.asarray(mu, dtype=float))
    a = np.asarray(_reachable_rate(rule, mus, params), dtype=float)
    h = np.full(mus.shape, float(dt)) if dt is not None else rate_step / a
    kN = params.k * params.n
    level = target.level

    def outlay(p, m):
        share = p if kind is IncentiveKind.REWARD else 1.0 - p
        return 0.5 * (kN * share * m) ** 2

    p = np.full(mus.shape, target.p0)
    J = np.zeros_like(p)
    active = np.ones(mus.shape, dtype=bool)
    if target.p0 >= level:
        return J
    while active.any():
        idx = np.flatnonzero(active)
        ai, hi, pi = a[idx], h[idx], p[idx]
        p_new = rk4_step(lambda y: ai * y * (1 - y), pi, hi)
        crossed = p_new >= level
        keep = ~crossed
        J[idx[keep]] += 0.5 * hi[keep] * (outlay(pi[keep], mus[idx[keep]]) + outlay(p_new[keep], mus[idx[keep]]))
        p[idx[keep]] = p_new[keep]
        for j in idx[crossed]:
            aj, pj = a[j], p[j]
            s = brentq(lambda s: rk4_step(lambda y: aj * y * (1 - y), pj, s) - level, 0.0, h[j],
                       xtol=1e-15, rtol=1e-15)
            J[j] += 0.5 * s * (outlay(pj, mus[j]) + outlay(level, mus[j]))
            p[j] = level
            active[j] = False
    return J if np.ndim(mu) else J[:1].reshape(())


def costate(rule: UpdateRule, kind, p_c, params: ModelParams):
    """Closed-form dJ*/dp_C of the optimal cost-to-go.

    The reward branch is the nonzero root of the stationary HJB equation;
    the punishment branch follows from the same steps with p_D in the outlay.
    """
    rule = UpdateRule.parse(rule)
    kind = _kind(kind)
    optimal_mu(rule, params)
    w, k, N = params.omega, params.k, params.n
    b, c = params.game.b, params.game.c
    if rule is UpdateRule.DB:
        coef = 2 * N**2 * (k - 1) * (b - c * k) / (w * (k - 2))
    elif rule is UpdateRule.BD:
        coef = -2 * N**2 * k * (k - 1) * c / (w * (k - 2))
    elif rule is UpdateRule.IM:
        coef = 2 * N**2 * (b - c * (k + 2)) * (k + 1) ** 2 * (k - 1) / (w * (k - 2) * (k + 2) ** 2)
    else:
        coef = -4 * N**2 * k * (k - 1) * c / (w * (k - 2))
    p = np.asarray(p_c, dtype=float)
    ratio = p / (1 - p) if kind is IncentiveKind.REWARD else (1 - p) / p
    return coef * ratio


def hamiltonian(rule: UpdateRule, kind, p_c, mu, params: ModelParams):
    kind = _kind(kind)
    share = p_c if kind is IncentiveKind.REWARD else 1 - np.asarray(p_c)
    running = 0.5 * (params.k * params.n * share * mu) ** 2
    return running + costate(rule, kind, p_c, params) * drift_rate(rule, mu, params) * p_c * (1 - np.asarray(p_c))


def hjb_stationarity(rule: UpdateRule, kind, p_c, params: ModelParams, mu: float | None = None):
    """dH/dmu at ``mu`` (default: the optimal level); vanishes at the optimum."""
    kind = _kind(kind)
    mu = optimal_mu(rule, params) if mu is None else mu
    p = np.asarray(p_c, dtype=float)
    share = p if kind is IncentiveKind.REWARD else 1 - p
    return (params.k * params.n * share) ** 2 * mu + costate(rule, kind, p, params) * drift_slope(rule, params) * p * (1 - p)


@dataclass(frozen=True)
class TheoryResult:
    rule: UpdateRule
    threshold: float
    mu_star: float | None
    beta: float | None
    j_reward: float | None
    j_punish: float | None
    t_f: float | None
    note: str = ""


def theory(rule: UpdateRule, params: ModelParams, target: Target) -> TheoryResult:
    rule = UpdateRule.parse(rule)
    thr = cooperation_threshold(rule, params)
    try:
        mu = optimal_mu(rule, params)
    except NoInteriorOptimum as exc:
        return TheoryResult(rule, thr, None, None, None, None, None,
                            note=f"no interior optimum; any mu >= 0 sustains cooperation ({exc})")
    rate = beta(rule, params)
    return TheoryResult(
        rule=rule,
        threshold=thr,
        mu_star=mu,
        beta=rate,
        j_reward=cost_closed_form(rule, IncentiveKind.REWARD, params, target),
        j_punish=cost_closed_form(rule, IncentiveKind.PUNISH, params, target),
        t_f=hitting_time(target.p0, target.delta, rate),
    )
