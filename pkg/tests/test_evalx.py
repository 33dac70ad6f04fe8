import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import linprog_value
from simaz.envs import DubinConfig, DubinTag, asym22, matching_pennies
from simaz.envs.toys import RandomTreeGame
from simaz.evalx import (ErrorTrialConfig, EvalReport, error_propagation_trial, evaluate_policy_network,
                         exploitability_vs_search_curve, theorem_bound, tree_minimax)
from simaz.exact import NodeBudgetExceeded, backward_induction
from simaz.mcts import SearchConfig
from simaz.net import NetConfig, init_params


class PolicyTable:
    """Evaluator built from explicit per-state strategies, with zero values."""

    def __init__(self, p1, p2):
        self.p1, self.p2 = p1, p2

    def evaluate(self, states):
        k = len(states)
        return (np.stack([self.p1(s) for s in states]), np.stack([self.p2(s) for s in states]),
                np.zeros(k))


def tiny_net(spec, seed=0):
    return init_params(NetConfig(spec.encoding_size, *spec.num_actions, v_min=-spec.value_bound(),
                                 v_max=spec.value_bound(), bins=11, trunk_width=8, head_width=8), seed)


def test_zero_noise_gives_zero_error():
    r = error_propagation_trial(ErrorTrialConfig(depth=2, epsilon=0.0, trials=5, draws=3))
    assert r.max_root_error == 0.0 and r.bound == 0.0 and r.passed


def test_zero_discount_annihilates_frontier():
    r = error_propagation_trial(ErrorTrialConfig(depth=2, gamma=0.0, epsilon=5.0, trials=5, draws=3))
    assert r.max_root_error == 0.0 and r.passed


def test_bound_arithmetic():
    assert theorem_bound(0.9, 3, 1.0) == pytest.approx(0.729, abs=1e-15)
    r = error_propagation_trial(ErrorTrialConfig(depth=3, gamma=0.9, epsilon=1.0, trials=10, draws=8))
    assert r.bound == pytest.approx(0.729, abs=1e-15) and r.passed


def test_tree_minimax_matches_backward_induction():
    g = RandomTreeGame(2, 3, 3, gamma=0.8, seed=3, open_frontier=True)
    R, leaves = g.level_arrays()
    values, _ = backward_induction(g, (), frontier=lambda h: g.leaf_values[h])
    assert tree_minimax(R, leaves, 0.8) == pytest.approx(values[(0, ())], abs=1e-9)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_one_level_tree_matches_scipy(seed):
    g = RandomTreeGame(3, 3, 1, gamma=0.9, seed=seed, open_frontier=True)
    R, leaves = g.level_arrays()
    assert tree_minimax(R, leaves, 0.9) == pytest.approx(linprog_value(R[0][0] + 0.9 * leaves.reshape(3, 3))[0], abs=1e-7)


def test_trial_budget_guard():
    with pytest.raises(NodeBudgetExceeded):
        ErrorTrialConfig(depth=10, n=3, m=3).validate()


def test_exact_nash_policies_unexploitable():
    g = RandomTreeGame(2, 2, 2, gamma=0.9, seed=1)
    _, pol = backward_induction(g, ())
    depth = {h: len(h) for h in [()] + list(g.rewards) + g.leaves}
    ev = PolicyTable(lambda s: pol.table[(depth[s], s)][0], lambda s: pol.table[(depth[s], s)][1])
    row = evaluate_policy_network(g, ev, method="exact")
    assert abs(row.exploitability) <= 1e-6


def test_uniform_and_pure_on_pennies():
    g = matching_pennies(3)
    uni = PolicyTable(lambda s: np.full(2, 0.5), lambda s: np.full(2, 0.5))
    assert evaluate_policy_network(g, uni).exploitability == pytest.approx(0.0, abs=1e-12)
    pure = PolicyTable(lambda s: np.array([1.0, 0.0]), lambda s: np.array([1.0, 0.0]))
    row = evaluate_policy_network(g, pure)
    assert row.exploitability == pytest.approx(6.0)
    assert row.brv_p1 == pytest.approx(-3.0) and row.brv_p2 == pytest.approx(-3.0)


def test_curve_shapes_and_determinism(tmp_path):
    g = asym22(2)
    net = tiny_net(g)
    a = exploitability_vs_search_curve(g, net, [0, 4, 16], seeds=[0, 1], search=SearchConfig())
    b = exploitability_vs_search_curve(g, net, [0, 4, 16], seeds=[0, 1], search=SearchConfig())
    assert len(a.rows) == 6 and len(a.aggregate()) == 3
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    a.write_aggregate_csv(tmp_path / "agg.csv")
    assert len(list(csv.DictReader(open(tmp_path / "agg.csv")))) == 3
    a.write_json(tmp_path / "r.json", {"k": 1})
    assert json.loads((tmp_path / "r.json").read_text())["config"] == {"k": 1}


def test_curve_workers_match_serial():
    g = matching_pennies(2)
    net = tiny_net(g, 3)
    a = exploitability_vs_search_curve(g, net, [0, 8], seeds=[0, 1])
    b = exploitability_vs_search_curve(g, net, [0, 8], seeds=[0, 1], workers=2)
    assert a.rows == b.rows


def test_aggregate_statistics():
    from simaz.evalx import EvalRow
    rep = EvalReport([EvalRow("g", -1.0, 0.0, 1.0, 8, s, "exact") for s in range(3)]
                     + [EvalRow("g", -3.0, 0.0, 3.0, 8, 3, "exact")])
    (agg,) = rep.aggregate()
    assert agg["exploitability_mean"] == pytest.approx(1.5)
    assert agg["exploitability_std"] == pytest.approx(np.std([1, 1, 1, 3]))


def test_sampled_method_on_continuous_game():
    g = DubinTag(DubinConfig(horizon=3))
    row = evaluate_policy_network(g, tiny_net(g), method="sampled", episodes=2)
    assert row.method == "sampled" and np.isfinite(row.exploitability)
    assert evaluate_policy_network(g, tiny_net(g), method="auto").method == "exact"
    with pytest.raises(NodeBudgetExceeded):
        evaluate_policy_network(DubinTag(DubinConfig(horizon=8)), tiny_net(g), method="exact", node_budget=100)
