"""Property-based checks of the model invariants."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from coopincentive.game import GameParams, Incentive, IncentiveKind, Selection, payoff_matrix
from coopincentive.graphs import Graph, GraphSpec, generate, load_edge_list, save_edge_list
from coopincentive.mc import PopulationState, advance, make_rng
from coopincentive.meanfield import (
    ModelParams,
    UpdateRule,
    hitting_time,
    logistic_solution,
    psi,
    reduced_rhs,
    slow_manifold_q,
)
from coopincentive.optimal import Target, cost_closed_form, cost_constant, cost_difference, optimal_mu

rules = st.sampled_from(list(UpdateRule))
kinds = st.sampled_from([IncentiveKind.REWARD, IncentiveKind.PUNISH])
fractions = st.floats(0.02, 0.98)


@st.composite
def model_params(draw):
    c = draw(st.floats(0.2, 2.0))
    b = c * draw(st.floats(1.05, 3.5))
    k = draw(st.integers(3, 8))
    return ModelParams(GameParams(b, c), Selection(draw(st.floats(1e-4, 0.05))), k=k, n=draw(st.integers(k + 1, 500)))


@given(st.sampled_from(["reward", "punish"]), st.floats(0, 100, allow_nan=False))
def test_incentive_round_trip(kind, mu):
    inc = Incentive(kind, mu)
    back = Incentive.parse(f"{kind}:{mu!r}")
    assert back == inc


@given(st.floats(0, 10), st.floats(0, 10))
def test_payoff_linear_in_incentive(m1, m2):
    g = GameParams(2, 1)
    for kind in ("reward", "punish"):
        d = payoff_matrix(g, Incentive(kind, m1 + m2)) - payoff_matrix(g, Incentive(kind, m1))
        np.testing.assert_allclose(d, payoff_matrix(g, Incentive(kind, m2)) - payoff_matrix(g, Incentive.none()),
                                   atol=1e-9)


@given(model_params(), rules, kinds, fractions, st.floats(0.0, 4.0))
def test_manifold_drift_equals_reduced(params, rule, kind, p, mu):
    assume(rule is not UpdateRule.BD)
    full = params.omega * psi(rule, Incentive(kind, mu), p, slow_manifold_q(p, params.k), params)
    want = reduced_rhs(rule, p, mu, params)
    assert math.isclose(full, want, rel_tol=1e-9, abs_tol=1e-15)


@given(fractions, st.floats(0.001, 0.5), st.floats(1e-3, 1.0))
def test_hitting_time_inverts_logistic(p0, delta, rate):
    assume(p0 < 1 - delta)
    t = hitting_time(p0, delta, rate)
    assert math.isclose(float(logistic_solution(t, p0, rate)), 1 - delta, rel_tol=1e-9)


@given(model_params(), rules, fractions, st.floats(0.001, 0.5))
def test_crossover_sign(params, rule, p0, delta):
    assume(p0 < 1 - delta and abs(p0 - delta) > 1e-6)
    try:
        optimal_mu(rule, params)
    except ValueError:
        return
    d = cost_difference(rule, params, Target(p0, delta))
    assert math.copysign(1, d) == math.copysign(1, p0 - delta)


@given(model_params(), rules, kinds, st.floats(1.01, 3.0))
def test_optimum_beats_neighbours(params, rule, kind, factor):
    try:
        mu = optimal_mu(rule, params)
    except ValueError:
        return
    tgt = Target(0.5, 0.01)
    best = cost_closed_form(rule, kind, params, tgt)
    assert cost_constant(rule, kind, mu * factor, params, tgt) > best
    from coopincentive.meanfield import cooperation_threshold
    thr = cooperation_threshold(rule, params)
    lower = thr + (mu - thr) / factor
    assert cost_constant(rule, kind, lower, params, tgt) > best


@given(fractions, fractions)
def test_costs_decrease_with_p0(a, b):
    assume(abs(a - b) > 1e-6 and max(a, b) < 0.99)
    lo, hi = sorted((a, b))
    params = ModelParams()
    for kind in (IncentiveKind.REWARD, IncentiveKind.PUNISH):
        assert cost_closed_form("db", kind, params, Target(hi, 0.01)) < cost_closed_form("db", kind, params, Target(lo, 0.01))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["erdos_renyi", "watts_strogatz", "barabasi_albert", "random_regular"]))
def test_edge_list_round_trip(seed, family):
    g = generate(GraphSpec(family=family, n=30, seed=seed))
    assert load_edge_list(save_edge_list(g)) == g


@settings(max_examples=30, deadline=None)
@given(rules, st.integers(0, 2**63), st.integers(1, 400), st.sampled_from([0, 1]))
def test_absorbing_states_property(rule, seed, steps, fill):
    g = generate(GraphSpec(family="random_regular", n=12, k=3, seed=seed % 1000))
    state = PopulationState(np.full(12, fill))
    advance(rule, state, g, GameParams(), Incentive.reward(1.0), Selection(0.05), make_rng(seed), steps)
    assert state.coop_count == 12 * fill


@settings(max_examples=30, deadline=None)
@given(rules, st.integers(0, 2**63), st.lists(st.integers(0, 1), min_size=9, max_size=9))
def test_single_event_changes_count_by_at_most_one(rule, seed, strategies):
    g = Graph.from_edges(9, [(i, (i + 1) % 9) for i in range(9)] + [(0, 4), (2, 7)])
    state = PopulationState(np.array(strategies))
    before = state.coop_count
    advance(rule, state, g, GameParams(), Incentive.punish(0.5), Selection(0.1), make_rng(seed), 1)
    assert abs(state.coop_count - before) <= 1
    assert state.coop_count == state.strategies.sum()


@given(model_params(), rules, st.integers(10, 1000), st.floats(1e-4, 0.09))
def test_optimal_mu_independent_of_size_and_selection(params, rule, n, omega):
    other = ModelParams(params.game, Selection(omega), k=params.k, n=max(n, params.k + 1))
    try:
        a = optimal_mu(rule, params)
    except ValueError:
        return
    assert optimal_mu(rule, other) == a
