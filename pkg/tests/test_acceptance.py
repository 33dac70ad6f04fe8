"""Acceptance gate: one test per numbered criterion, each printing a PASS/FAIL line.

Tolerances, sample counts and runtime limits are pinned below and must not be
relaxed. Run ``pytest tests/test_acceptance.py -v`` to see the verdict table
in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from oracles import RPS, finite_difference
from simaz.envs import SdaConfig, SdaState, asym22, matching_pennies, sda_eclipse, sda_los_occluded, sda_sun_blinded
from simaz.envs.dubin import DubinConfig, DubinState, DubinTag, TURNS, wrap_angle
from simaz.envs.sda import MU_EARTH, R_EARTH, circular_state, propagate
from simaz.envs.toys import RandomTreeGame
from simaz.evalx import ErrorTrialConfig, error_propagation_trial, exploitability_vs_search_curve, theorem_bound
from simaz.exact import backward_induction, joint_exploitability, uniform_policy
from simaz.matgame import brute_force_bracket, exploitability_matrix, regret_matching_solve, solve_lp
from simaz.mcts import SearchConfig, UniformEvaluator, run_search
from simaz.net import (Batch, NetConfig, ValueBinning, hl_gauss_target, init_params, load_checkpoint,
                       loss, loss_grads, save_checkpoint)
from simaz.train import TrainConfig, net_config_for, raw_brv, train_loop

# smoke protocol shared by the learning criteria
SMOKE_TRAIN = dict(n_iter=8, n_ep=8, batch_size=64, grad_steps=32, seed=0)
SMOKE_SEARCH = dict(n_sim=32)


def smoke_config():
    return TrainConfig(**SMOKE_TRAIN, search=SearchConfig(**SMOKE_SEARCH))


def test_c01_matrix_game_oracle(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_gap = worst_expl = 0.0
    for _ in range(1000):
        n, m = rng.integers(2, 5, size=2)
        A = rng.uniform(-1.0, 1.0, size=(n, m))
        sol = solve_lp(A)
        lower, upper, _, _ = brute_force_bracket(A, 1e-3)
        worst_gap = max(worst_gap, abs(sol.value - 0.5 * (lower + upper)))
        worst_expl = max(worst_expl, exploitability_matrix(A, sol.row_strategy, sol.col_strategy))
    secs = time.perf_counter() - t0
    ok = worst_gap <= 0.01 and worst_expl <= 1e-8 and secs < 60
    assert verdict(1, ok, f"max |lp - brute| {worst_gap:.2e} <= 1e-2, max exploitability {worst_expl:.1e} <= 1e-8", secs)


def test_c02_regret_matching_convergence(verdict):
    t0 = time.perf_counter()
    e100, e10k = [], []
    for seed in range(100):
        rng = np.random.default_rng(np.random.SeedSequence([7, seed]))
        x0, y0 = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        for T, out in ((100, e100), (10_000, e10k)):
            s = regret_matching_solve(RPS, T, x0, y0)
            out.append(exploitability_matrix(RPS, s.row_strategy, s.col_strategy))
    e100, e10k = np.array(e100), np.array(e10k)
    improved = int((e10k < e100).sum())
    secs = time.perf_counter() - t0
    ok = e10k.max() < 0.05 and e100.max() < 0.5 and improved >= 95 and secs < 60
    assert verdict(2, ok, f"max expl T=1e4 {e10k.max():.4f} < 0.05, T=100 {e100.max():.4f} < 0.5, "
                          f"improved {improved}/100 >= 95", secs)


def test_c03_exact_solver_self_consistency(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(50):
        n, m = (int(k) for k in rng.integers(1, 4, size=2))
        depth = int(rng.integers(1, 4))
        gamma = float(rng.choice([0.5, 0.9, 1.0]))
        g = RandomTreeGame(n, m, depth, gamma=gamma, seed=1000 + i)
        _, policy = backward_induction(g, ())
        worst = max(worst, abs(joint_exploitability(g, (), policy.player(1), policy.player(2))))
    secs = time.perf_counter() - t0
    assert verdict(3, worst <= 1e-6 and secs < 60, f"max exploitability {worst:.1e} <= 1e-6 over 50 games", secs)


def test_c04_search_converges_to_exact(verdict):
    t0 = time.perf_counter()
    hits, errs = 0, []
    for seed in range(20):
        g = RandomTreeGame(2, 2, 2, gamma=1.0, seed=seed)
        values, _ = backward_induction(g, ())
        res = run_search(g, (), UniformEvaluator(g), SearchConfig(n_sim=5000), rng=seed)
        err = abs(res.v_root - values[(0, ())])
        errs.append(err)
        hits += err <= 0.05
    secs = time.perf_counter() - t0
    ok = hits >= 18 and secs < 300
    assert verdict(4, ok, f"{hits}/20 games within 0.05 (need 18), max error {max(errs):.4f}", secs)


def test_c05_frontier_error_bound(verdict):
    t0 = time.perf_counter()
    failures, worst_ratio = [], 0.0
    for depth in (1, 2, 3):
        for gamma in (0.5, 0.9, 1.0):
            for eps in (0.1, 1.0):
                r = error_propagation_trial(ErrorTrialConfig(depth=depth, gamma=gamma, epsilon=eps,
                                                             trials=200, draws=32, seed=depth * 100 + int(gamma * 10)))
                # every trial, not just the worst, must respect the bound
                if not all(e <= r.bound + 1e-12 for e in r.errors):
                    failures.append((depth, gamma, eps))
                worst_ratio = max(worst_ratio, r.max_root_error / r.bound)
    exact = theorem_bound(0.9, 3, 1.0) == 0.9 ** 3 and abs(theorem_bound(0.9, 3, 1.0) - 0.729) < 1e-15
    secs = time.perf_counter() - t0
    ok = not failures and exact and secs < 120
    assert verdict(5, ok, f"18 settings x 200 trials, violations {failures or 'none'}, "
                          f"max error/bound {worst_ratio:.4f}, bound(0.9,3,1) = {theorem_bound(0.9, 3, 1.0):.3f}", secs)


def test_c06_gradient_correctness(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = 0.0
    for arch in range(10):
        cfg = NetConfig(input_size=int(rng.integers(2, 7)), n1=int(rng.integers(2, 5)), n2=int(rng.integers(2, 5)),
                        bins=int(rng.integers(3, 12)), trunk_width=int(rng.integers(3, 10)),
                        head_width=int(rng.integers(3, 10)), v_min=-2.0, v_max=2.0)
        params = init_params(cfg, arch)
        # zero biases behind a dead ReLU layer put preactivations exactly on the
        # kink, where no derivative exists; check at a generic point instead
        for key, arr in params.arrays.items():
            if key.endswith(".b"):
                arr += rng.normal(0.0, 0.1, size=arr.shape)
        k = 6
        batch = Batch(rng.standard_normal((k, cfg.input_size)), rng.dirichlet(np.ones(cfg.n1), k),
                      rng.dirichlet(np.ones(cfg.n2), k), rng.uniform(-2.5, 2.5, k))
        _, grads = loss_grads(params, batch, 1e-3)
        keys = list(params.arrays)
        for _ in range(20):
            name = keys[rng.integers(len(keys))]
            idx = tuple(int(rng.integers(s)) for s in params.arrays[name].shape)
            fd = finite_difference(lambda: loss(params, batch, 1e-3).total, params.arrays[name], idx)
            an = grads[name][idx]
            scale = max(abs(fd), abs(an))
            # coordinates whose true gradient vanishes only need an absolute match
            rel = abs(fd - an) / scale if scale > 1e-7 else 0.0
            worst = max(worst, rel)
    secs = time.perf_counter() - t0
    assert verdict(6, worst < 1e-4 and secs < 60, f"max relative error {worst:.2e} < 1e-4 over 200 coordinates", secs)


def test_c07_hl_gauss(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    b = ValueBinning(-5.0, 5.0, 41)
    assert b.width == pytest.approx(0.75 * b.bin_width)
    v = rng.uniform(-6.0, 6.0, size=1000)
    t = hl_gauss_target(v, b)
    sum_err = float(np.abs(t.sum(axis=1) - 1.0).max())
    mean_err = float(np.abs(t @ b.centers - np.clip(v, -5.0, 5.0)).max())
    secs = time.perf_counter() - t0
    ok = sum_err <= 1e-12 and mean_err <= b.bin_width / 2 and secs < 10
    assert verdict(7, ok, f"max |sum - 1| {sum_err:.1e} <= 1e-12, max |E - v| {mean_err / b.bin_width:.3f} bin "
                          f"<= 0.5 bin", secs)


@pytest.fixture(scope="module")
def trained_nets():
    nets = {}
    for name, game in (("asym22(1)", asym22(1)), ("matching_pennies(3)", matching_pennies(3)),
                       ("asym22(2)", asym22(2))):
        t0 = time.perf_counter()
        params, _ = train_loop(game, smoke_config())
        nets[name] = (game, params, time.perf_counter() - t0)
    return nets


def test_c08_equilibrium_learning(verdict, trained_nets):
    g, params, secs = trained_nets["asym22(1)"]
    t0 = time.perf_counter()
    initial = init_params(net_config_for(g, smoke_config()), np.random.SeedSequence([SMOKE_TRAIN["seed"], 0xBEEF]))
    before = -sum(raw_brv(g, initial))
    uniform = joint_exploitability(g, 0, uniform_policy(g, 1), uniform_policy(g, 2))
    after = -sum(raw_brv(g, params))
    secs += time.perf_counter() - t0
    ok = after < 0.2 and after < before and secs < 600
    assert verdict(8, ok, f"raw exploitability {before:.3f} -> {after:.4f} < 0.2 "
                          f"(uniform pair {uniform:.3f})", secs)


def test_c09_search_strengthens_robustness(verdict, trained_nets):
    t0 = time.perf_counter()
    parts, ok, train_secs = [], True, 0.0
    for name in ("matching_pennies(3)", "asym22(2)"):
        g, params, spent = trained_nets[name]
        train_secs += spent
        agg = {r["search_iters"]: r["exploitability_mean"]
               for r in exploitability_vs_search_curve(g, params, [8, 512], seeds=range(8)).aggregate()}
        ok &= agg[512] <= agg[8]
        parts.append(f"{name} {agg[8]:.4f} -> {agg[512]:.4f}")
    secs = time.perf_counter() - t0 + train_secs
    assert verdict(9, ok and secs < 600, "mean exploitability N_sim 8 -> 512: " + ", ".join(parts), secs)


def test_c10_environment_physics(verdict):
    t0 = time.perf_counter()
    checks = {}
    cfg = DubinConfig()
    g = DubinTag(cfg)
    rng = np.random.default_rng(10)
    arc_ok = True
    for _ in range(200):
        s = g.initial_state(rng)
        a1, a2 = (int(a) for a in rng.integers(0, 3, size=2))
        nxt = g.transition(s, a1, a2).next_state
        for before, after, act, v in ((s.attacker, nxt.attacker, a1, cfg.v_att), (s.defender, nxt.defender, a2, cfg.v_def)):
            u = TURNS[act] * cfg.u_max
            # heading advances by exactly u * dt (modulo the wrap)
            arc_ok &= abs(wrap_angle(after[2] - before[2] - u * cfg.dt)) < 1e-12
            if u == 0.0:
                arc_ok &= abs(math.hypot(after[0] - before[0], after[1] - before[1]) - v * cfg.dt) < 1e-12
    checks["dubin arcs"] = arc_ok
    straight = g.transition(DubinState((3.0, 3.0, 0.0), (-3.0, -3.0, 0.0)), 1, 1).next_state
    checks["dubin straight"] = straight.attacker[:2] == pytest.approx((3.0 + cfg.v_att * cfg.dt, 3.0), abs=1e-15)

    r0 = R_EARTH + 500.0
    period = 2 * math.pi * math.sqrt(r0 ** 3 / MU_EARTH)
    s = np.array(circular_state(r0, 0.0))
    drift = 0.0
    for _ in range(100):
        s = propagate(s, period / 100, 1)
        drift = max(drift, abs(math.hypot(s[0], s[1]) - r0) / r0)
    checks["orbit radius"] = drift < 1e-6

    sc = SdaConfig()
    r = R_EARTH + 400.0
    far = (0.0, r + 100.0, 0.0, 0.0)
    table = [
        (sda_eclipse(SdaState(far, (-r, 0.0, 0.0, 0.0), (1.0, 0.0)), sc), True),
        (sda_eclipse(SdaState(far, (r, 0.0, 0.0, 0.0), (1.0, 0.0)), sc), False),
        (sda_los_occluded(SdaState((7000.0, 0.0, 0.0, 0.0), (-7000.0, 0.0, 0.0, 0.0)),
                          SdaConfig(earth_radius=6371.0)), True),
        (sda_los_occluded(SdaState((7000.0, 0.0, 0.0, 0.0), (7000.0, 500.0, 0.0, 0.0)), sc), False),
        (sda_sun_blinded(SdaState((r, 0.0, 0.0, 0.0), (r + 100.0, 10.0, 0.0, 0.0), (1.0, 0.0)), sc), True),
        (sda_sun_blinded(SdaState((r, 0.0, 0.0, 0.0), (r, 500.0, 0.0, 0.0), (1.0, 0.0)), sc), False),
    ]
    checks["geometry table"] = all(got == want for got, want in table)
    secs = time.perf_counter() - t0
    ok = all(checks.values()) and secs < 30
    assert verdict(10, ok, ", ".join(f"{k} {'ok' if v else 'BAD'}" for k, v in checks.items())
                   + f", radius drift {drift:.1e}", secs)


def test_c11_serialization(verdict, tmp_path):
    t0 = time.perf_counter()
    g = asym22(2)
    params, _ = train_loop(g, TrainConfig(n_iter=2, n_ep=2, batch_size=16, grad_steps=8,
                                          search=SearchConfig(n_sim=16)))
    first = save_checkpoint(params, tmp_path / "a.saz")
    reloaded = load_checkpoint(first)
    second = save_checkpoint(reloaded, tmp_path / "b.saz")
    same_bytes = first.read_bytes() == second.read_bytes()

    def report_csv(net):
        buf = tmp_path / "r.csv"
        exploitability_vs_search_curve(g, net, [0, 8, 64], seeds=range(3)).write_csv(buf)
        return buf.read_bytes()

    same_report = report_csv(params) == report_csv(reloaded)
    secs = time.perf_counter() - t0
    assert verdict(11, same_bytes and same_report,
                   f"checkpoint bytes identical {same_bytes}, reloaded eval report identical {same_report}", secs)
