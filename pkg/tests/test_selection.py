import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dagsim import oracles
from dagsim.selection import (
    InequalityInstance,
    MarginalSolver,
    SelectionGame,
    StrategyProfile,
    best_response,
    brute_force_nash,
    distinct_count,
    exact_regrets,
    exact_utility,
    fairness_check,
    find_equilibrium,
    lemma_ineq_check,
    marginal_values,
    mc_utility,
    random_instance,
)

F = Fraction


# -- model validation ------------------------------------------------------

def test_game_validation():
    with pytest.raises(ValueError):
        SelectionGame([1, 1], [1, 2])  # rewards must be non-increasing
    with pytest.raises(ValueError):
        SelectionGame([1, 0], [1])
    with pytest.raises(ValueError):
        SelectionGame([1], [3, 1], delta=2)
    assert SelectionGame([1], [3, 1]).delta == 3


def test_profile_rows_must_sum_to_one():
    with pytest.raises(ValueError):
        StrategyProfile([[F(1, 2), F(1, 3)]])
    with pytest.raises(ValueError):
        StrategyProfile([[0.5, 0.5 + 1e-9]])
    StrategyProfile([[0.5, 0.5 + 1e-13]])


def test_game_record_round_trip(tmp_path):
    game = SelectionGame([1, F(5, 2)], [F(7, 3), 1], 3)
    assert SelectionGame.from_record(game.record()).record() == game.record()


# -- utilities ---------------------------------------------------------------

def test_lone_miner_gets_the_reward():
    game = SelectionGame([3], [5, 2])
    assert exact_utility(game, StrategyProfile.pure([1], 2), 0) == 2


def test_equal_miners_on_same_tx_split():
    game = SelectionGame([1, 1], [4, 2])
    prof = StrategyProfile.pure([0, 0], 2)
    assert exact_utility(game, prof, 0) == 2
    assert exact_utility(game, prof, 1) == 2


def test_half_mixed_against_pure():
    game = SelectionGame([1, 1], [1, 1])
    prof = StrategyProfile([[F(1, 2), F(1, 2)], [F(1), F(0)]])
    assert exact_utility(game, prof, 0) == F(3, 4)
    assert oracles.subset_marginals([1, 1], prof.rows, 0) == [F(1, 2), F(1)]


@st.composite
def games_and_profiles(draw, max_m=4, max_n=3):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    powers = draw(st.lists(st.integers(1, 5), min_size=m, max_size=m))
    rewards = sorted(draw(st.lists(st.integers(1, 9), min_size=n, max_size=n)), reverse=True)
    rows = []
    for _ in range(m):
        w = draw(st.lists(st.integers(0, 6), min_size=n, max_size=n).filter(any))
        rows.append([F(x, sum(w)) for x in w])
    return SelectionGame(powers, rewards), StrategyProfile(rows)


@given(games_and_profiles())
def test_marginals_three_routes_agree(gp):
    game, prof = gp
    for i in range(game.m):
        oracle = [p * v for p, v in zip(game.rewards, oracles.subset_marginals(game.powers, prof.rows, i))]
        assert marginal_values(game, prof, i) == oracle
        dp = MarginalSolver(game).marginals(prof.as_array(), i)
        assert np.allclose(dp, [float(x) for x in oracle], rtol=1e-12, atol=1e-14)


@given(games_and_profiles(), st.data())
def test_utility_affine_in_own_row(gp, data):
    game, prof = gp
    i = data.draw(st.integers(0, game.m - 1))
    other = data.draw(games_and_profiles().filter(lambda x: x[0].n == game.n))[1].rows[0]
    r1, r2 = prof.rows[i], other
    u1 = exact_utility(game, prof.with_row(i, r1), i)
    u2 = exact_utility(game, prof.with_row(i, r2), i)
    for lam in (F(0), F(1, 4), F(1, 2), F(1), data.draw(st.fractions(0, 1))):
        mix = [lam * a + (1 - lam) * b for a, b in zip(r1, r2)]
        assert exact_utility(game, prof.with_row(i, mix), i) == lam * u1 + (1 - lam) * u2


@given(games_and_profiles(), st.fractions(min_value=F(1, 10), max_value=10))
def test_scale_invariances(gp, c):
    game, prof = gp
    for i in range(game.m):
        base = marginal_values(game, prof, i)
        best = {j for j, v in enumerate(base) if v == max(base)}
        scaled = marginal_values(game.scaled(reward_factor=c), prof, i)
        assert {j for j, v in enumerate(scaled) if v == max(scaled)} == best
        assert best_response(game.scaled(reward_factor=c), prof, i).index == best_response(game, prof, i).index
        assert exact_utility(game.scaled(power_factor=c), prof, i) == exact_utility(game, prof, i)


def test_mc_pure_uncontested_has_zero_variance():
    game = SelectionGame([1, 2], [F(3, 2), 1])
    est = mc_utility(game, StrategyProfile.pure([0, 1], 2, exact=False), 0, 500, seed=1)
    assert est.mean == 1.5 and est.stderr == 0.0


def test_mc_deterministic_and_close():
    rng = np.random.default_rng(5)
    for m in (3, 8, 12):
        game = SelectionGame([int(x) for x in rng.integers(1, 5, size=m)], [3, 2, 2, 1])
        rows = rng.dirichlet(np.ones(4), size=m)
        prof = StrategyProfile(rows)
        a = mc_utility(game, prof, 0, 20000, seed=9)
        assert a == mc_utility(game, prof, 0, 20000, seed=9)
        exact = exact_utility(game, prof, 0)
        assert abs(a.mean - exact) <= 4 * a.stderr


# -- best responses and equilibria -------------------------------------------

def test_best_response_examples():
    game = SelectionGame([1, 1], [1, F(9, 10)])
    br = best_response(game, StrategyProfile.pure([0, 0], 2), 0)
    assert br.marginals == [F(1, 2), F(9, 10)] and br.index == 1
    assert best_response(SelectionGame([2], [3, 1]), StrategyProfile.pure([1], 2), 0).index == 0
    uni = StrategyProfile([[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]])
    assert best_response(SelectionGame([1, 1], [1, 1]), uni, 0).index == 0


def test_symmetric_two_by_two_anti_coordinates():
    game = SelectionGame([1, 1], [1, 1])
    rep = find_equilibrium(game, eps=1e-6, seed=0)
    assert rep.converged
    picks = [int(np.argmax(r)) for r in rep.profile.as_array()]
    assert sorted(picks) == [0, 1]
    assert max(exact_regrets(game, rep.profile)) <= F(1, 10**6)


def test_lone_miner_jumps_to_argmax():
    game = SelectionGame([1], [5, 3, 2])
    rep = find_equilibrium(game, seed=3)
    assert rep.converged and rep.iterations == 2  # one moving sweep, one certifying sweep
    assert rep.profile.rows[0][0] == 1.0
    assert rep.max_regret == 0


def test_three_miners_two_tx_regret_verified_exactly():
    game = SelectionGame([1, 1, 1], [1, 1])
    rep = find_equilibrium(game, eps=1e-6, seed=4)
    assert rep.converged
    assert max(exact_regrets(game, rep.profile)) <= F(1, 10**6)
    assert all(r >= 0 for r in rep.regrets)


@given(games_and_profiles(max_m=3, max_n=3), st.integers(0, 100))
def test_converged_profiles_pass_exact_scan(gp, seed):
    game, _ = gp
    rep = find_equilibrium(game, eps=1e-6, seed=seed)
    if rep.converged:
        assert max(exact_regrets(game, rep.profile)) <= F(1, 10**6) * game.max_reward


def test_brute_force_finds_anti_coordination():
    found = {p for p, _ in brute_force_nash(SelectionGame([1, 1], [1, 1]), grid=4)}
    assert StrategyProfile([[1.0, 0.0], [0.0, 1.0]]) in found
    assert StrategyProfile([[0.0, 1.0], [1.0, 0.0]]) in found
    exact = {p for p, _ in brute_force_nash(SelectionGame([1, 1], [1, 1]), grid=4, tol=0.0)}
    assert StrategyProfile([[1.0, 0.0], [1.0, 0.0]]) not in exact
    assert StrategyProfile([[1.0, 0.0], [0.0, 1.0]]) in exact


def test_brute_force_single_miner():
    found = brute_force_nash(SelectionGame([1], [3, 2, 1]), grid=5)
    assert [p.rows for p, _ in found] == [((1.0, 0.0, 0.0),)]


def test_brute_force_lopsided_rewards():
    # p_2 < p_1 / 2: sharing tx1 beats taking tx2 alone
    game = SelectionGame([1, 1], [100, 1])
    both = StrategyProfile([[1.0, 0.0], [1.0, 0.0]])
    assert both in {p for p, _ in brute_force_nash(game, grid=4, tol=0.0)}
    assert max(exact_regrets(game, both.as_fractions())) == 0


def test_brute_force_limits():
    with pytest.raises(ValueError):
        brute_force_nash(SelectionGame([1] * 4, [1]))


# -- throughput and fairness -------------------------------------------------

def test_distinct_count_extremes():
    game = SelectionGame([1, 2, 3], [1, 1, 1])
    assert distinct_count(game, StrategyProfile.pure([1, 1, 1], 3), 50, seed=0).histogram() == {1: 50}
    assert distinct_count(game, StrategyProfile.pure([0, 1, 2], 3), 50, seed=0).histogram() == {3: 50}


def test_distinct_count_occupancy_mean():
    m = n = 20
    game = SelectionGame([1] * m, [1] * n)
    prof = StrategyProfile(np.full((m, n), 1.0 / n))
    dc = distinct_count(game, prof, 20000, seed=2)
    expected = n * (1 - (1 - 1 / n) ** m)
    assert abs(dc.mean - expected) <= 4 * dc.stderr


def test_fairness_examples():
    small = StrategyProfile([[0.5, 0.5]] * 3)
    assert not fairness_check(small, 1).triggered and fairness_check(small, 1).holds
    # 27 miners, column sums (26, 1) with delta 2: 26 >= 24 triggers, 1 >= 1/2 holds
    rows = [[1.0, 0.0]] * 26 + [[0.0, 1.0]]
    rep = fairness_check(StrategyProfile(rows), 2)
    assert rep.triggered and rep.holds
    rows = [[1.0, 0.0]] * 26 + [[0.7, 0.3]]
    assert not fairness_check(StrategyProfile(rows), 2).holds


# -- the k-subset inequality --------------------------------------------------

def test_inequality_uniform_example():
    q = F(1, 4)
    res = lemma_ineq_check(InequalityInstance((q, q, q, q), 2, q, 8))
    assert res.lhs == F(6, 256)
    assert math.isclose(res.rhs, math.e**2 * 0.5**6)
    assert res.holds


def test_inequality_preconditions():
    q = F(1, 4)
    with pytest.raises(ValueError):
        InequalityInstance((q,) * 4, 4, q, 3)
    with pytest.raises(ValueError):
        InequalityInstance((F(1, 2), F(1, 2)), 1, F(1, 3), 3)
    with pytest.raises(ValueError):
        InequalityInstance((q,) * 3, 1, q, 3)
    with pytest.raises(ValueError):
        lemma_ineq_check(InequalityInstance((F(1, 17),) * 17, 2, F(1, 17), 3))


def test_inequality_small_exponent_counterexample():
    # with m = 1 every element sits in C(n-1, k-1) subsets, which can exceed e^k zeta^(1-k)
    a = (F(1, 4),) * 4 + (F(0),) * 8
    res = lemma_ineq_check(InequalityInstance(a, 3, F(1, 4), 1))
    assert res.lhs == math.comb(11, 2)
    assert res.rhs == pytest.approx(math.e**3 / F(3, 4) ** 2)
    assert not res.holds


@given(st.integers(0, 10**6))
def test_random_instances_are_valid(seed):
    inst = random_instance(np.random.default_rng(seed))
    assert sum(inst.a) == 1 and all(0 <= x <= inst.delta for x in inst.a)
    assert inst.k * inst.delta < 1 and (1 / inst.delta).denominator == 1
    res = lemma_ineq_check(inst)
    assert res.holds == (res.lhs < math.e**inst.k * inst.zeta ** (inst.m - inst.k)) or math.isclose(
        float(res.lhs), res.rhs, rel_tol=1e-12)
