import math

import numpy as np
import pytest

from coopincentive.game import GameParams, IncentiveKind, Selection
from coopincentive.meanfield import ModelParams
from coopincentive.optimal import (
    NoInteriorOptimum,
    Target,
    UnreachableTarget,
    cost_closed_form,
    cost_constant,
    cost_difference,
    cost_quadrature,
    costate,
    hamiltonian,
    hjb_stationarity,
    optimal_mu,
    theory,
)

BASE = ModelParams(GameParams(2, 1), Selection(0.01), k=4, n=100)
TGT = Target(0.5, 0.01)
RULES = ["db", "bd", "im", "pc"]
R, P = IncentiveKind.REWARD, IncentiveKind.PUNISH


@pytest.mark.parametrize("rule,mu", [("db", 1.0), ("bd", 2.0), ("im", 4 / 3), ("pc", 2.0)])
def test_optimal_mu_baseline(rule, mu):
    assert optimal_mu(rule, BASE) == pytest.approx(mu)


def test_optimal_mu_is_twice_the_threshold_gap():
    # mu* = -2 a(0)/a'(mu) for every rule; check with a generic parameter set
    params = ModelParams(GameParams(2.5, 0.8), Selection(0.02), k=6)
    from coopincentive.meanfield import drift_rate, drift_slope
    for rule in RULES:
        assert optimal_mu(rule, params) == pytest.approx(-2 * drift_rate(rule, 0.0, params) / drift_slope(rule, params))


def test_no_interior_optimum():
    with pytest.raises(NoInteriorOptimum):
        optimal_mu("db", ModelParams(GameParams(6, 1), Selection(0.01), k=4))
    with pytest.raises(NoInteriorOptimum):
        optimal_mu("im", ModelParams(GameParams(6, 1), Selection(0.01), k=4))
    # BD and PC always need incentives
    assert optimal_mu("bd", ModelParams(GameParams(60, 1), Selection(0.01), k=4)) == 2.0


def test_target_validation():
    with pytest.raises(ValueError):
        Target(0.0, 0.01)
    with pytest.raises(ValueError):
        Target(0.95, 0.1)
    assert Target(0.5, 0.0).level == 1.0


def test_spot_costs_db():
    # (kN mu*)^2 / (2 beta) = 160000 * 37.5 = 6e6 times the brackets
    jr = cost_closed_form("db", R, BASE, TGT)
    jp = cost_closed_form("db", P, BASE, TGT)
    assert jr == pytest.approx(6e6 * (0.01 - 0.5 + math.log(50)), rel=1e-12)
    assert jp == pytest.approx(6e6 * (0.01 - 0.5 + math.log(1.98)), rel=1e-12)
    assert jr == pytest.approx(2.0532e7, rel=1e-4)
    assert jp == pytest.approx(1.1586e6, rel=1e-4)


def test_cost_difference():
    d = cost_difference("db", BASE, TGT)
    assert d == pytest.approx(cost_closed_form("db", R, BASE, TGT) - cost_closed_form("db", P, BASE, TGT), rel=1e-12)
    assert cost_difference("db", BASE, Target(0.2, 0.2)) == pytest.approx(0.0, abs=1e-6)
    assert cost_difference("db", BASE, Target(0.5, 0.0)) == math.inf


@pytest.mark.parametrize("rule", RULES)
@pytest.mark.parametrize("kind", [R, P])
def test_quadrature_matches_analytic(rule, kind):
    mu = np.array([optimal_mu(rule, BASE) * f for f in (0.8, 1.0, 1.7)])
    num = cost_quadrature(rule, kind, mu, BASE, TGT)
    ana = cost_constant(rule, kind, mu, BASE, TGT)
    np.testing.assert_allclose(num, ana, rtol=1e-7)
    assert float(cost_quadrature(rule, kind, mu[1], BASE, TGT)) == pytest.approx(ana[1], rel=1e-7)


def test_constant_cost_at_optimum_equals_closed_form():
    for rule in RULES:
        for kind in (R, P):
            mu = optimal_mu(rule, BASE)
            assert cost_constant(rule, kind, mu, BASE, TGT) == pytest.approx(cost_closed_form(rule, kind, BASE, TGT))


def test_unreachable():
    with pytest.raises(UnreachableTarget):
        cost_constant("bd", R, 1.0, BASE, TGT)
    with pytest.raises(UnreachableTarget):
        cost_quadrature("db", P, [0.4, 1.0], BASE, TGT)
    with pytest.raises(ValueError):
        cost_constant("db", IncentiveKind.NONE, 1.0, BASE, TGT)


@pytest.mark.parametrize("rule", RULES)
@pytest.mark.parametrize("kind", [R, P])
def test_costate_is_gradient_of_cost_to_go(rule, kind):
    # the optimal cost-to-go from p is the closed-form cost started at p
    h = 1e-5
    for p in (0.2, 0.5, 0.8):
        up = cost_closed_form(rule, kind, BASE, Target(p + h, 0.01))
        dn = cost_closed_form(rule, kind, BASE, Target(p - h, 0.01))
        assert costate(rule, kind, p, BASE) == pytest.approx((up - dn) / (2 * h), rel=1e-6)


@pytest.mark.parametrize("rule", RULES)
@pytest.mark.parametrize("kind", [R, P])
def test_hamiltonian_minimised_and_zero_at_optimum(rule, kind):
    mu_star = optimal_mu(rule, BASE)
    grid = np.linspace(0.0, 3 * mu_star, 301)
    for p in (0.25, 0.6):
        H = np.array([hamiltonian(rule, kind, p, m, BASE) for m in grid])
        assert grid[np.argmin(H)] == pytest.approx(mu_star, abs=grid[1] - grid[0])
        scale = (BASE.k * BASE.n) ** 2
        assert abs(hamiltonian(rule, kind, p, mu_star, BASE)) < 1e-9 * scale
        assert abs(hjb_stationarity(rule, kind, p, BASE)) < 1e-9 * scale
        assert abs(hjb_stationarity(rule, kind, p, BASE, mu=1.5 * mu_star)) > 1.0


def test_theory_table():
    res = theory("db", BASE, TGT)
    assert res.threshold == 0.5 and res.mu_star == 1.0
    assert res.beta == pytest.approx(0.013333333333333)
    assert res.j_reward == pytest.approx(2.0532e7, rel=1e-4)
    assert res.t_f == pytest.approx(75 * math.log(99))
    assert theory("bd", BASE, TGT).mu_star == 2.0
    rich = theory("db", ModelParams(GameParams(6, 1), Selection(0.01), k=4), TGT)
    assert rich.mu_star is None and "no interior optimum" in rich.note
