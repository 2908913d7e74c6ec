"""Pair-approximation dynamics on k-regular graphs under weak selection.

Two levels of description are provided:

* the two-variable pair system ``(p_C, q_C|C)`` with drift ``w*Psi`` and
  relaxation ``Phi`` for every update rule and incentive sign, and
* the reduced logistic equation obtained on the slow manifold
  ``q_C|C = p_C + (1 - p_C)/(k - 1)``.

Higher-order remainders in the selection strength are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .game import GameParams, Incentive, IncentiveKind, Selection

P_EPS = 1e-12
STATE_TOL = 1e-9


class UpdateRule(str, Enum):
    DB = "db"
    BD = "bd"
    IM = "im"
    PC = "pc"

    @classmethod
    def parse(cls, text) -> "UpdateRule":
        if isinstance(text, cls):
            return text
        return cls(str(text).strip().lower())


RULES = tuple(UpdateRule)


class IntegrationError(RuntimeError):
    """The integrated state left the unit interval."""


@dataclass(frozen=True)
class ModelParams:
    game: GameParams = GameParams()
    sel: Selection = Selection()
    k: int = 4
    n: int = 100

    def __post_init__(self):
        if int(self.k) != self.k or self.k <= 2:
            raise ValueError(f"degree k must be an integer > 2, got {self.k}")
        if self.n < self.k + 1:
            raise ValueError(f"population size N must be >= k+1, got N={self.n}, k={self.k}")

    @property
    def omega(self) -> float:
        return self.sel.omega


@dataclass(frozen=True)
class PairState:
    p_c: float
    q_cc: float

    @property
    def p_cd(self) -> float:
        return (1.0 - self.q_cc) * self.p_c

    @property
    def q_cd(self) -> float:
        """q_C|D, the chance that a defector's neighbour cooperates."""
        return self.p_cd / (1.0 - self.p_c)

    def is_valid(self, tol: float = 1e-12) -> bool:
        if not (-tol <= self.p_c <= 1 + tol and -tol <= self.q_cc <= 1 + tol):
            return False
        if self.p_cd > min(self.p_c, 1.0 - self.p_c) + tol:
            return False
        return self.p_c >= 1.0 or -tol <= self.q_cd <= 1 + tol


# --- reduced (slow-manifold) dynamics -------------------------------------------------


def drift_rate(rule: UpdateRule, mu, params: ModelParams):
    """Coefficient a(mu) in dp/dt = a(mu) * p * (1 - p)."""
    rule = UpdateRule.parse(rule)
    w, k = params.omega, params.k
    b, c = params.game.b, params.game.c
    mu = np.asarray(mu, dtype=float) if np.ndim(mu) else float(mu)
    if rule is UpdateRule.DB:
        return w * (k - 2) / (k - 1) * (b + k * (mu - c))
    if rule is UpdateRule.BD:
        return w * k * (k - 2) / (k - 1) * (mu - c)
    if rule is UpdateRule.IM:
        return w * k**2 * (k - 2) / ((k + 1) ** 2 * (k - 1)) * (b + (mu - c) * (k + 2))
    return w * k * (k - 2) / (2 * (k - 1)) * (mu - c)


def drift_slope(rule: UpdateRule, params: ModelParams) -> float:
    """d a(mu) / d mu, the (constant) sensitivity of the drift to the incentive."""
    return float(drift_rate(rule, 1.0, params) - drift_rate(rule, 0.0, params))


def reduced_rhs(rule: UpdateRule, p_c, mu, params: ModelParams):
    return drift_rate(rule, mu, params) * p_c * (1.0 - p_c)


def slow_manifold_q(p_c, k: int):
    return p_c + (1.0 - p_c) / (k - 1)


def cooperation_threshold(rule: UpdateRule, params: ModelParams, clamp: bool = False) -> float:
    """Smallest incentive above which full cooperation is the stable state.

    The raw value may be negative (cooperation favoured without incentives);
    ``clamp=True`` floors it at zero.
    """
    rule = UpdateRule.parse(rule)
    b, c, k = params.game.b, params.game.c, params.k
    if rule is UpdateRule.DB:
        mu = c - b / k
    elif rule is UpdateRule.IM:
        mu = c - b / (k + 2)
    else:
        mu = c
    return max(mu, 0.0) if clamp else mu


def beta(rule: UpdateRule, params: ModelParams) -> float:
    """Logistic growth rate under the optimal constant protocol."""
    rule = UpdateRule.parse(rule)
    w, k = params.omega, params.k
    b, c = params.game.b, params.game.c
    if rule is UpdateRule.DB:
        val = w * (k - 2) * (c * k - b) / (k - 1)
    elif rule is UpdateRule.BD:
        val = w * k * (k - 2) * c / (k - 1)
    elif rule is UpdateRule.IM:
        val = w * k**2 * (k - 2) * (c * (k + 2) - b) / ((k + 1) ** 2 * (k - 1))
    else:
        val = w * k * (k - 2) * c / (2 * (k - 1))
    if val <= 0:
        raise ValueError(f"beta_{rule.name} = {val:g} <= 0: no optimal protocol for these parameters")
    return val


def logistic_solution(t, p0: float, rate: float):
    return 1.0 / (1.0 + (1.0 - p0) / p0 * np.exp(-rate * np.asarray(t, dtype=float)))


def hitting_time(p0: float, delta: float, rate: float) -> float:
    """Time for the logistic curve started at p0 to reach 1 - delta."""
    if delta == 0:
        return math.inf
    return math.log((1.0 - p0) * (1.0 - delta) / (p0 * delta)) / rate


# --- pair dynamics ----------------------------------------------------------------------


def _conditionals(p: float, q: float):
    p = min(max(p, P_EPS), 1.0 - P_EPS)
    p_cd = (1.0 - q) * p
    q_cd = p_cd / (1.0 - p)
    return p, p_cd, q_cd, 1.0 - q, 1.0 - q_cd


def _eta(inc: Incentive, game: GameParams, q_cc, q_dc, q_cd, q_dd) -> float:
    """Payoff advantage term shared by all rules."""
    b, c, mu = game.b, game.c, inc.mu
    if inc.kind is IncentiveKind.PUNISH:
        return (b - c) * q_cc - c * q_dc + (mu - b) * q_cd + mu * q_dd
    return (b - c + mu) * q_cc + (mu - c) * q_dc - b * q_cd


def mean_fitness(inc: Incentive, p_c: float, q_cc: float, params: ModelParams) -> float:
    """Population-average fitness used by birth-death updating."""
    w, k = params.omega, params.k
    b, c, mu = params.game.b, params.game.c, inc.mu
    p, p_cd, _, _, _ = _conditionals(p_c, q_cc)
    p_cc = q_cc * p
    if inc.kind is IncentiveKind.PUNISH:
        p_dd = 1.0 - p - p_cd
        return 1 - w + w * k * ((b - c) * p_cc - c * p_cd + (b - mu) * p_cd - mu * p_dd)
    return 1 - w + k * w * ((b - c + mu) * p_cc + (mu - c) * p_cd + b * p_cd)


def psi(rule: UpdateRule, inc: Incentive, p_c: float, q_cc: float, params: ModelParams,
        im_form: str = "consistent") -> float:
    """First-order selection drift of p_C (dp_C/dt = w * psi).

    ``im_form`` selects the imitation expression: ``"consistent"`` (default)
    or ``"grouped"``, the sign-specific groupings with a (k+1)^2 factor.
    The grouped forms do not reduce to the logistic drift and are kept only
    for comparison.
    """
    rule = UpdateRule.parse(rule)
    k = params.k
    b, c, mu = params.game.b, params.game.c, inc.mu
    p, p_cd, q_cd, q_dc, q_dd = _conditionals(p_c, q_cc)
    eta = _eta(inc, params.game, q_cc, q_dc, q_cd, q_dd)
    m = mu - c
    if rule is UpdateRule.DB:
        return (k - 1) / k * p_cd * (m + (k - 1) * eta) * (q_cc + q_dd)
    if rule is UpdateRule.BD:
        return p_cd / mean_fitness(inc, p, q_cc, params) * ((m - b) + (k - 1) * eta)
    if rule is UpdateRule.PC:
        return p_cd / 2 * ((m - b) + (k - 1) * eta)
    pre = k * p_cd / (k + 1) ** 2
    base = 2 * ((m - b) + (k - 1) * eta) + (k - 1) * m * (q_cc + q_dd)
    if im_form == "consistent":
        return pre * (base + (k - 1) ** 2 * (q_cc + q_dd) * eta)
    if im_form != "grouped":
        raise ValueError(f"unknown im_form {im_form!r}")
    if inc.kind is IncentiveKind.PUNISH:
        return pre * (base + (k + 1) ** 2 * (q_cc + q_dd) * eta)
    return pre * (base + (k + 1) ** 2 * q_cc + q_dd * eta)


def phi(rule: UpdateRule, p_c: float, q_cc: float, params: ModelParams) -> float:
    """Zeroth-order relaxation speed of q_C|C."""
    rule = UpdateRule.parse(rule)
    k = params.k
    p, p_cd, q_cd, _, _ = _conditionals(p_c, q_cc)
    core = p_cd / p * (1 + (k - 1) * (q_cd - q_cc))
    if rule in (UpdateRule.DB, UpdateRule.BD):
        return 2 * core / k
    if rule is UpdateRule.IM:
        return 2 * core / (k + 1)
    return core / k


def full_pair_rhs(rule: UpdateRule, inc: Incentive, state: PairState, params: ModelParams,
                  im_form: str = "consistent") -> tuple[float, float]:
    """(dp_C/dt, dq_C|C/dt) of the pair system. Endpoints of p_C are rejected."""
    if not 0.0 < state.p_c < 1.0:
        raise ValueError(f"pair dynamics need 0 < p_C < 1, got {state.p_c}")
    return (params.omega * psi(rule, inc, state.p_c, state.q_cc, params, im_form),
            phi(rule, state.p_c, state.q_cc, params))


# --- integration -------------------------------------------------------------------------


@dataclass
class ODETrajectory:
    t: np.ndarray
    p_c: np.ndarray
    q_cc: np.ndarray | None = None
    reached: bool = False

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def to_csv(self) -> str:
        cols = [self.t, self.p_c] + ([self.q_cc] if self.q_cc is not None else [])
        header = "t,p_c" + (",q_cc" if self.q_cc is not None else "")
        rows = (",".join(f"{v:.15g}" for v in row) for row in zip(*cols))
        return header + "\n" + "\n".join(rows) + "\n"


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _check(y, t):
    for v in np.atleast_1d(y) if isinstance(y, np.ndarray) else (y,):
        if not -STATE_TOL <= v <= 1 + STATE_TOL:
            raise IntegrationError(f"state {y} left [0, 1] at t={t:g}")


def integrate(rule: UpdateRule, inc: Incentive, p0: float, params: ModelParams, *,
              full_pair: bool = False, q0: float | None = None, dt: float = 0.01,
              t_max: float = 1000.0, delta: float | None = None, record_stride: float | None = None,
              im_form: str = "consistent") -> ODETrajectory:
    """Fixed-step RK4 integration of the reduced or the pair dynamics.

    Stops at ``t_max`` or, when ``delta`` is given, as soon as p_C reaches
    1 - delta; the last step is then shortened so the final sample sits on
    the target.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"initial p_C must lie in (0, 1), got {p0}")
    rule = UpdateRule.parse(rule)
    stride = 1 if record_stride is None else max(1, int(round(record_stride / dt)))

    if full_pair:
        q0 = slow_manifold_q(p0, params.k) if q0 is None else q0

        def f(y):
            return np.array(full_pair_rhs(rule, inc, PairState(float(y[0]), float(y[1])), params, im_form))

        y = np.array([p0, q0], dtype=float)
    else:
        a = float(drift_rate(rule, inc.mu, params))

        def f(y):
            return a * y * (1.0 - y)

        y = float(p0)

    def lead(y):
        return y[0] if full_pair else y

    target = None if delta is None else 1.0 - delta
    ts, ys = [0.0], [y]
    n_steps = int(math.ceil(t_max / dt - 1e-9))
    reached = False
    for step in range(1, n_steps + 1):
        t0 = (step - 1) * dt
        h = min(dt, t_max - t0)
        y_new = rk4_step(f, y, h)
        if target is not None and lead(y_new) >= target:
            if lead(y) >= target:
                h = 0.0
                y_new = y
            else:
                h = brentq(lambda s: lead(rk4_step(f, y, s)) - target, 0.0, h, xtol=1e-15, rtol=1e-15)
                y_new = rk4_step(f, y, h)
            _check(y_new, t0 + h)
            if h > 0:
                ts.append(t0 + h)
                ys.append(y_new)
            reached = True
            break
        _check(y_new, t0 + h)
        y = y_new
        if step % stride == 0 or step == n_steps:
            ts.append(t0 + h)
            ys.append(y)
    arr = np.array(ys)
    if not full_pair:
        return ODETrajectory(t=np.array(ts), p_c=arr, reached=reached)
    return ODETrajectory(t=np.array(ts), p_c=arr[:, 0], q_cc=arr[:, 1], reached=reached)
