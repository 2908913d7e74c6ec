"""Prisoner's dilemma payoffs with institutional reward or punishment."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

WEAK_SELECTION = 0.1


class Strategy(int, Enum):
    D = 0
    C = 1


class IncentiveKind(str, Enum):
    NONE = "none"
    REWARD = "reward"
    PUNISH = "punish"


class FitnessError(ArithmeticError):
    """A fitness value is non-positive, so proportional selection is undefined."""


@dataclass(frozen=True)
class GameParams:
    b: float = 2.0
    c: float = 1.0

    def __post_init__(self):
        if not 0 < self.c < self.b:
            raise ValueError(f"need 0 < c < b, got b={self.b}, c={self.c}")


@dataclass(frozen=True)
class Incentive:
    """Per-interaction incentive: reward to C players or fine on D players."""

    kind: IncentiveKind = IncentiveKind.NONE
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", IncentiveKind(self.kind))
        if self.mu < 0:
            raise ValueError(f"incentive amount must be >= 0, got {self.mu}")
        if self.kind is IncentiveKind.NONE and self.mu != 0:
            object.__setattr__(self, "mu", 0.0)

    @classmethod
    def reward(cls, mu: float) -> "Incentive":
        return cls(IncentiveKind.REWARD, mu)

    @classmethod
    def punish(cls, mu: float) -> "Incentive":
        return cls(IncentiveKind.PUNISH, mu)

    @classmethod
    def none(cls) -> "Incentive":
        return cls()

    @classmethod
    def parse(cls, text: str) -> "Incentive":
        """Parse ``reward:MU``, ``punish:MU`` or ``none``."""
        text = text.strip().lower()
        if text == "none":
            return cls()
        kind, sep, mu = text.partition(":")
        if not sep:
            raise ValueError(f"bad incentive {text!r}; use reward:MU, punish:MU or none")
        aliases = {"reward": IncentiveKind.REWARD, "punish": IncentiveKind.PUNISH,
                   "punishment": IncentiveKind.PUNISH}
        if kind not in aliases:
            raise ValueError(f"unknown incentive kind {kind!r}")
        return cls(aliases[kind], float(mu))

    def __str__(self):
        return "none" if self.kind is IncentiveKind.NONE else f"{self.kind.value}:{self.mu:g}"


@dataclass(frozen=True)
class Selection:
    omega: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"selection strength must lie in [0, 1], got {self.omega}")

    @property
    def weak(self) -> bool:
        return self.omega <= WEAK_SELECTION


def payoff_matrix(game: GameParams, inc: Incentive) -> np.ndarray:
    """2x2 matrix indexed [self, other] with D=0, C=1."""
    m = np.array([[0.0, game.b], [-game.c, game.b - game.c]])
    if inc.kind is IncentiveKind.REWARD:
        m[Strategy.C] += inc.mu
    elif inc.kind is IncentiveKind.PUNISH:
        m[Strategy.D] -= inc.mu
    return m


def pair_payoff(s_self: Strategy, s_other: Strategy, game: GameParams, inc: Incentive) -> float:
    return float(payoff_matrix(game, inc)[int(s_self), int(s_other)])


def node_payoff(i: int, strategies, g, game: GameParams, inc: Incentive) -> float:
    """Accumulated payoff of node ``i`` against all of its neighbours."""
    m = payoff_matrix(game, inc)
    si = int(strategies[i])
    return float(sum(m[si, int(strategies[j])] for j in g.adjacency[i]))


def fitness(pi, sel: Selection):
    """Map payoff to fitness 1 - w + w*pi; raises FitnessError if any value is <= 0."""
    f = 1.0 - sel.omega + sel.omega * np.asarray(pi, dtype=float)
    if np.any(f <= 0):
        raise FitnessError(f"non-positive fitness {np.min(f)} (omega={sel.omega})")
    return float(f) if f.ndim == 0 else f
