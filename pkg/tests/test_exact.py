import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ASYM22, minimax_by_enumeration
from simaz.envs import DubinTag, asym22, matching_pennies, rps
from simaz.envs.toys import GridPursuit, RandomTreeGame, RepeatedMatrixGame
from simaz.exact import (NodeBudgetExceeded, backward_induction, best_response_value,
                         joint_exploitability, pure_policy, uniform_policy)


def test_one_shot_asym22():
    g = asym22(1, gamma=0.3)
    values, policy = backward_induction(g, 0)
    assert values[(0, 0)] == pytest.approx(0.2, abs=1e-12)
    x, y = policy.table[(0, 0)]
    assert x == pytest.approx([0.4, 0.6]) and y == pytest.approx([0.4, 0.6])


def test_repeated_pennies_value_zero():
    values, _ = backward_induction(matching_pennies(2), 0)
    assert values[(0, 0)] == pytest.approx(0.0, abs=1e-12)
    assert values[(2, 2)] == 0.0


def test_repeated_game_discounts_stages():
    g = RepeatedMatrixGame(ASYM22, horizon=3, gamma=0.5)
    values, _ = backward_induction(g, 0)
    assert values[(0, 0)] == pytest.approx(0.2 * (1 + 0.5 + 0.25), abs=1e-12)


@given(st.integers(0, 10_000), st.floats(0.1, 10))
def test_scaling_rewards_scales_value(seed, c):
    g = RandomTreeGame(2, 3, 2, gamma=0.8, seed=seed)
    values, policy = backward_induction(g, ())
    g.rewards = {h: c * r for h, r in g.rewards.items()}
    scaled, spolicy = backward_induction(g, ())
    assert scaled[(0, ())] == pytest.approx(c * values[(0, ())], rel=1e-9, abs=1e-12)
    x, y = policy.table[(0, ())]
    sx, sy = spolicy.table[(0, ())]
    assert np.allclose(x, sx, atol=1e-7) and np.allclose(y, sy, atol=1e-7)


@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.5, 1.0]))
def test_matches_scipy_tree_minimax(seed, gamma):
    g = RandomTreeGame(2, 2, 2, gamma=gamma, seed=seed)
    values, _ = backward_induction(g, ())
    assert values[(0, ())] == pytest.approx(minimax_by_enumeration(g, ()), abs=1e-7)


def test_value_bound():
    g = RandomTreeGame(3, 3, 3, gamma=0.9, seed=2)
    values, _ = backward_induction(g, ())
    assert max(abs(v) for v in values.values()) <= g.value_bound() + 1e-12


def test_frontier_values_are_used():
    g = RandomTreeGame(2, 2, 1, gamma=0.5, seed=0, open_frontier=True)
    base, _ = backward_induction(g, (), frontier=lambda s: 0.0)
    shifted, _ = backward_induction(g, (), frontier=lambda s: 2.0)
    assert shifted[(0, ())] == pytest.approx(base[(0, ())] + 1.0)


def test_node_budget():
    with pytest.raises(NodeBudgetExceeded):
        backward_induction(GridPursuit(3, 3), GridPursuit(3, 3).initial_state(), node_budget=10)
    with pytest.raises(NodeBudgetExceeded):
        best_response_value(DubinTag(), DubinTag().initial_state(), uniform_policy(DubinTag(), 1),
                            responder=2, horizon=8, node_budget=1000)


def test_best_response_examples():
    g = matching_pennies(3)
    assert best_response_value(g, 0, uniform_policy(g, 1), responder=2) == pytest.approx(0.0)
    assert best_response_value(g, 0, pure_policy(g, 2, 0), responder=1) == pytest.approx(3.0)
    assert best_response_value(g, 0, pure_policy(g, 1, 0), responder=2) == pytest.approx(3.0)


def test_best_response_to_nash_is_minus_value():
    g = RandomTreeGame(3, 2, 2, gamma=0.9, seed=11)
    values, policy = backward_induction(g, ())
    v = values[(0, ())]
    assert best_response_value(g, (), policy.player(1), responder=2) == pytest.approx(-v, abs=1e-6)
    assert best_response_value(g, (), policy.player(2), responder=1) == pytest.approx(v, abs=1e-6)


def test_joint_exploitability_examples():
    g = matching_pennies(1)
    assert joint_exploitability(g, 0, pure_policy(g, 1, 0), pure_policy(g, 2, 0)) == pytest.approx(2.0)
    r = rps(1)
    assert joint_exploitability(r, 0, uniform_policy(r, 1), uniform_policy(r, 2)) == pytest.approx(0.0)


@given(st.integers(0, 10_000))
def test_nash_stage_policies_unexploitable(seed):
    g = RandomTreeGame(3, 3, 2, gamma=0.7, seed=seed)
    _, policy = backward_induction(g, ())
    assert abs(joint_exploitability(g, (), policy.player(1), policy.player(2))) <= 1e-6


def test_bad_responder():
    g = matching_pennies(1)
    with pytest.raises(ValueError):
        best_response_value(g, 0, uniform_policy(g, 1), responder=3)
