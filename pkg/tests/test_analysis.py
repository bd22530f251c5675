"""Verification harness: metrics, convergence detection, and every check."""

import math

import numpy as np
import pytest

from helpers import config, constant, random_mixed_config, scenario
from lfmix import (
    build_scenario,
    check_ball_invariance,
    check_consensus_bound,
    check_contraction,
    check_contraction_step,
    check_mixture_limit,
    check_subsystem_independence,
    check_target_envelope,
    check_target_envelope_all,
    detect_convergence,
    max_target_distance,
    metrics_rows,
    neighbors_naive,
    opinion_diameter,
    run,
)
from lfmix.analysis import CROSSTALK, INAPPLICABLE, UNDEFINED_LIMIT, target_envelope_along
from lfmix.dynamics import STOP_CONVERGED
from lfmix.model import SystemState


def two_leader_scenario(alpha=0.5, horizon=10):
    return scenario(
        epsilon=1.0,
        leader_groups=[("brand", 2, [0.0], constant(alpha))],
        initial=[[0.2], [0.4]],
        horizon=horizon,
    )


def consensus_demo(horizon=60):
    return scenario(
        epsilon=1.0,
        followers=1,
        leader_groups=[("brand", 1, [0.0], constant(0.5))],
        initial=[[0.3], [0.1]],
        follower_betas=[constant(0.5)],
        horizon=horizon,
    )


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def test_max_target_distance_examples():
    sc = two_leader_scenario()
    state0 = sc.initial_state
    assert max_target_distance(state0, sc, 1) == pytest.approx(0.4, abs=1e-15)
    at_target = SystemState(0, np.zeros((2, 1)))
    assert max_target_distance(at_target, sc, 1) == 0.0
    shifted = SystemState(0, np.asarray([[0.0], [0.125]]))
    assert max_target_distance(shifted, sc, 1) == 0.125


def test_opinion_diameter_matches_brute_force():
    rng = np.random.default_rng(0)
    for n, d in ((1, 2), (2, 3), (40, 2), (300, 3)):
        x = rng.uniform(-1, 1, size=(n, d))
        brute = 0.0
        for i in range(n):
            brute = max(brute, float(np.sqrt(((x - x[i]) ** 2).sum(axis=1)).max()))
        assert opinion_diameter(x) == pytest.approx(brute, rel=1e-12)


def test_opinion_diameter_hull_path_is_exact():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, size=(3000, 2))  # large enough to take the hull path
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    assert opinion_diameter(x) == pytest.approx(math.sqrt(float(d2.max())), rel=1e-12)


def test_metrics_rows_shape_and_degrees():
    sc = consensus_demo(horizon=5)
    traj = run(sc)
    rows = metrics_rows(traj)
    assert [r.t for r in rows] == list(range(6))
    assert rows[0].target_distances == (0.1,)
    assert rows[0].follower_max_distance == 0.3
    assert rows[0].max_alpha == 0.5
    assert rows[0].max_one_minus_beta_sum == 0.5
    assert rows[-1].max_alpha is None  # no step leaves the final state


# ---------------------------------------------------------------------------
# convergence detection
# ---------------------------------------------------------------------------


def constant_states(value, count):
    return [SystemState(t, np.full((1, 1), value)) for t in range(count)]


def test_detect_convergence_constant_trajectory():
    for window in (1, 3, 5):
        rep = detect_convergence(constant_states(0.7, 10), tol=1e-9, window=window)
        assert rep.converged and rep.first_step == window


def test_detect_convergence_geometric_decay():
    states = [SystemState(t, np.full((1, 1), 0.5**t)) for t in range(40)]
    rep = detect_convergence(states, tol=1e-9, window=1)
    # displacement at step t is 0.5^(t-1) - 0.5^t = 0.5^t; 0.5^30 is the first below 1e-9
    assert rep.converged and rep.first_step == 30


def test_detect_convergence_two_cycle_never_converges():
    states = [SystemState(t, np.full((1, 1), 0.1 if t % 2 else -0.1)) for t in range(50)]
    rep = detect_convergence(states, tol=1e-3, window=2)
    assert not rep.converged and rep.first_step is None


def test_detect_convergence_agrees_with_run_stop():
    sc = scenario(
        epsilon=1.0,
        leader_groups=[("brand", 1, [0.0], constant(0.5))],
        initial=[[1.0]],
        horizon=100,
        stop_tol=1e-9,
        stop_window=1,
    )
    traj = run(sc)
    assert traj.stop_reason == STOP_CONVERGED
    rep = detect_convergence(traj, tol=1e-9, window=1)
    assert rep.converged and rep.first_step == traj.horizon == 30


# ---------------------------------------------------------------------------
# contraction
# ---------------------------------------------------------------------------


def test_contraction_step_hand_example():
    sc = two_leader_scenario()
    traj = run(sc, 1)
    nbrs = neighbors_naive(traj.states[0], sc)
    rep = check_contraction_step(traj.states[0], traj.states[1], nbrs, {0: 0.5, 1: 0.5}, sc)
    assert rep.passed
    by_label = {r.label: r for r in rep.records}
    agent0 = by_label["agent 0"]
    assert agent0.lhs == pytest.approx(0.15, abs=1e-12)
    assert agent0.rhs == pytest.approx(0.2, abs=1e-12)
    assert agent0.slack == pytest.approx(0.05, abs=1e-12)
    group = by_label["group brand"]
    assert group.lhs == pytest.approx(0.15, abs=1e-12)
    assert group.rhs == pytest.approx(0.2, abs=1e-12)


def test_contraction_alpha_zero_reaches_zero():
    sc = two_leader_scenario(alpha=0.0)
    traj = run(sc, 1)
    rep = check_contraction(traj)
    assert rep.passed
    assert max_target_distance(traj.states[1], sc, 1) == 0.0


def test_contraction_random_sweep_smoke():
    rng = np.random.default_rng(7)
    for _ in range(20):
        sc = build_scenario(random_mixed_config(rng, horizon=15))
        traj = run(sc)
        rep = check_contraction(traj)
        assert rep.passed, rep.failures()[:3]
        assert rep.worst_slack is None or rep.worst_slack >= -1e-9


def test_contraction_detects_mean_shift_fault():
    traj = run(consensus_demo(), fault="mean-shift")
    assert not check_contraction(traj).passed


def test_monotone_group_distance():
    rng = np.random.default_rng(17)
    for _ in range(10):
        sc = build_scenario(random_mixed_config(rng, horizon=25))
        traj = run(sc)
        for k in range(1, sc.m + 1):
            curve = [max_target_distance(s, sc, k) for s in traj.states]
            for a, b in zip(curve, curve[1:]):
                assert b <= a + 1e-9


# ---------------------------------------------------------------------------
# target envelope
# ---------------------------------------------------------------------------


def test_envelope_tight_for_constant_half():
    sc = scenario(
        epsilon=1.0,
        leader_groups=[("brand", 1, [0.0], constant(0.5))],
        initial=[[1.0]],
        horizon=20,
    )
    traj = run(sc)
    rep = check_target_envelope(traj, 1, 0.5)
    assert rep.passed
    env = [r for r in rep.records if r.label == "envelope"]
    assert all(r.slack == 0.0 for r in env)  # 0.5^t is exactly representable


def test_envelope_certifies_at_197_steps():
    # ceil(log(1e-9) / log(0.9)) = 197
    sc = scenario(
        epsilon=1.0,
        leader_groups=[("brand", 1, [0.0], constant(0.9))],
        initial=[[1.0]],
        horizon=197,
    )
    traj = run(sc)
    rep = check_target_envelope(traj, 1, 0.9, target_tol=1e-9)
    assert rep.params["needed_horizon"] == 197
    final = [r for r in rep.records if r.label == "final_target"]
    assert len(final) == 1 and final[0].lhs <= 1e-9
    assert rep.passed

    short = run(sc, 196)
    rep_short = check_target_envelope(short, 1, 0.9, target_tol=1e-9)
    assert not any(r.label == "final_target" for r in rep_short.records)
    assert "note" in rep_short.params


def test_envelope_trivial_when_started_at_target():
    sc = scenario(
        epsilon=1.0,
        leader_groups=[("brand", 2, [0.0], constant(0.9))],
        initial=[[0.0], [0.0]],
        horizon=5,
    )
    rep = check_target_envelope(run(sc), 1, 0.9)
    assert rep.passed
    assert rep.params["needed_horizon"] == 0
    assert all(r.lhs == 0.0 for r in rep.records)


def test_envelope_inapplicable_when_delta_violated():
    traj = run(two_leader_scenario(alpha=0.8), 5)
    rep = check_target_envelope(traj, 1, 0.5)
    assert rep.status == "skipped"
    assert rep.reason.startswith(INAPPLICABLE)
    assert check_target_envelope(traj, 1, 1.0).status == "skipped"


def test_envelope_all_measures_delta():
    traj = run(consensus_demo(), 30)
    rep = check_target_envelope_all(traj)
    assert rep.passed
    assert rep.params["delta_brand"] == 0.5


def test_envelope_along_subsequence():
    # degrees alternate 1.0 and 0.5; contraction is only claimed on the 0.5 steps
    table = {"kind": "table", "values": [1.0, 0.5] * 10}
    sc = scenario(
        epsilon=1.0,
        leader_groups=[("brand", 1, [0.0], table)],
        initial=[[1.0]],
        horizon=20,
    )
    traj = run(sc)
    designated = [t for t in range(20) if t % 2 == 1]
    rep = target_envelope_along(traj, 1, 0.5, designated)
    assert rep.passed
    env = [r for r in rep.records if r.label == "envelope"]
    assert all(r.slack == 0.0 for r in env)  # bound is tight on this run
    bad = target_envelope_along(traj, 1, 0.5, [0])  # degree there is 1.0
    assert bad.status == "skipped"


def test_per_agent_vanishing_degree_reaches_target():
    # one leader's degree decays to zero while the others hold at 1; the
    # stubborn pair sits outside the decaying agent's confidence range
    cfg = config(
        epsilon=0.3,
        leader_groups=[("brand", 3, [0.0], constant(1.0))],
        initial=[[1.5], [2.5], [2.6]],
        horizon=60,
    )
    cfg["schedules"]["brand"]["per_agent"] = {
        "0": {"alpha": {"kind": "geometric_decay", "initial": 1.0, "ratio": 0.5}}
    }
    traj = run(build_scenario(cfg))
    final = traj.final_state.opinions
    assert abs(final[0, 0]) <= 1e-6
    assert abs(final[1, 0]) > 0.1  # averaging alone never reaches the target


# ---------------------------------------------------------------------------
# ball invariance
# ---------------------------------------------------------------------------


def test_ball_invariance_from_start():
    sc = consensus_demo()
    traj = run(sc)
    rep = check_ball_invariance(traj, sc.target(1), 0.3)
    assert rep.passed and rep.params["t0"] == 0


def test_ball_invariance_never_entered_is_vacuous():
    sc = scenario(
        epsilon=0.1,
        followers=1,
        leader_groups=[("brand", 1, [0.0], constant(1.0))],
        initial=[[5.0], [4.0]],
        follower_betas=[constant(0.0)],
        horizon=5,
    )
    rep = check_ball_invariance(run(sc), sc.target(1), 0.5)
    assert rep.passed and rep.params["t0"] == "never"


def test_ball_invariance_requires_single_leader_group():
    sc = scenario(
        epsilon=1.0,
        leader_groups=[("a", 1, [0.0], constant(0.5)), ("b", 1, [0.1], constant(0.5))],
        initial=[[0.0], [0.1]],
        horizon=2,
    )
    rep = check_ball_invariance(run(sc), sc.target(1), 1.0)
    assert rep.status == "skipped" and rep.reason.startswith(INAPPLICABLE)


def test_ball_invariance_center_must_be_target():
    sc = consensus_demo()
    rep = check_ball_invariance(run(sc, 5), np.asarray([0.05]), 0.5)
    assert rep.status == "skipped"


# ---------------------------------------------------------------------------
# consensus bound
# ---------------------------------------------------------------------------


def test_consensus_demo_bound_and_oracle():
    sc = consensus_demo()
    traj = run(sc)
    # independent two-term recurrence: x_F' = (x_F + x_L) / 2, x_L' = x_L / 2
    xf, xl = 0.3, 0.1
    for state in traj.states[1:]:
        xf, xl = 0.5 * xf + 0.5 * xl, 0.5 * xl
        assert state.opinions[0, 0] == pytest.approx(xf, abs=1e-15)
        assert state.opinions[1, 0] == pytest.approx(xl, abs=1e-15)
    rep = check_consensus_bound(traj)
    assert rep.passed
    assert rep.params["gamma"] == 0.5
    assert rep.params["delta"] == 0.3
    assert rep.params["p"] == 0
    assert rep.params["final_distance"] <= 1e-6
    assert rep.worst_slack >= -1e-9


def test_consensus_all_at_target_trivially_met():
    sc = scenario(
        epsilon=1.0,
        followers=2,
        leader_groups=[("brand", 1, [0.0], constant(0.5))],
        initial=[[0.0], [0.0], [0.0]],
        follower_betas=[constant(0.5)],
        horizon=5,
    )
    rep = check_consensus_bound(run(sc))
    assert rep.passed
    assert rep.params["delta"] == 0.0


def test_consensus_inapplicable_when_beta_zero():
    sc = scenario(
        epsilon=1.0,
        followers=1,
        leader_groups=[("brand", 1, [0.0], constant(0.5))],
        initial=[[0.3], [0.1]],
        follower_betas=[constant(0.0)],
        horizon=10,
    )
    rep = check_consensus_bound(run(sc))
    assert rep.status == "skipped"
    assert rep.reason.startswith(INAPPLICABLE)
    assert rep.params["gamma"] == 1.0


def test_consensus_inapplicable_outside_ball():
    sc = scenario(
        epsilon=0.05,
        followers=1,
        leader_groups=[("brand", 1, [0.0], constant(0.5))],
        initial=[[5.0], [3.0]],
        follower_betas=[constant(0.5)],
        horizon=3,
    )
    rep = check_consensus_bound(run(sc))
    assert rep.status == "skipped"


def test_consensus_detects_mean_shift_fault():
    traj = run(consensus_demo(), fault="mean-shift")
    rep = check_consensus_bound(traj)
    assert rep.applicable and not rep.passed


# ---------------------------------------------------------------------------
# mixture limit
# ---------------------------------------------------------------------------


def mixture_scenario():
    return scenario(
        epsilon=3.0,
        followers=3,
        leader_groups=[
            ("low", 2, [0.0], constant(0.5)),
            ("high", 2, [1.0], constant(0.5)),
        ],
        initial=[[0.35], [0.5], [0.65], [0.05], [-0.05], [0.95], [1.05]],
        follower_betas=[constant(0.2), constant(0.2)],
        horizon=80,
    )


def test_mixture_limit_two_groups():
    sc = mixture_scenario()
    traj = run(sc)
    rep = check_mixture_limit(traj)
    assert rep.passed
    # predicted limit: (0.2 * 0 + 0.2 * 1) / 0.4 = 0.5
    final = traj.final_state.opinions
    for i in range(3):
        assert final[i, 0] == pytest.approx(0.5, abs=1e-6)
    for i in (3, 4):
        assert abs(final[i, 0]) <= 1e-6
    for i in (5, 6):
        assert final[i, 0] == pytest.approx(1.0, abs=1e-6)


def test_mixture_limit_single_group_collapses_to_target():
    sc = consensus_demo()
    rep = check_mixture_limit(run(sc))
    assert rep.passed  # weights collapse to the single target


def test_mixture_limit_undefined_for_zero_betas():
    sc = scenario(
        epsilon=5.0,
        followers=1,
        leader_groups=[
            ("low", 1, [0.0], constant(0.5)),
            ("high", 1, [1.0], constant(0.5)),
        ],
        initial=[[0.5], [0.0], [1.0]],
        follower_betas=[constant(0.0), constant(0.0)],
        horizon=10,
    )
    rep = check_mixture_limit(run(sc))
    assert rep.status == "skipped"
    assert rep.reason.startswith(UNDEFINED_LIMIT)


def test_mixture_limit_requires_stabilized_betas():
    sc = scenario(
        epsilon=5.0,
        followers=1,
        leader_groups=[("low", 1, [0.0], constant(0.5))],
        initial=[[0.5], [0.0]],
        follower_betas=[{"kind": "seeded_random", "seed": 5, "low": 0.1, "high": 0.6}],
        horizon=20,
    )
    rep = check_mixture_limit(run(sc))
    assert rep.status == "skipped"
    assert "not stabilized" in rep.reason


# ---------------------------------------------------------------------------
# subsystem independence
# ---------------------------------------------------------------------------


def subsystem_config(epsilon=1.0, targets=(0.0, 10.0)):
    lo, hi = targets
    cfg = config(
        epsilon=epsilon,
        followers=4,
        leader_groups=[
            ("south", 2, [lo], constant(0.5)),
            ("north", 2, [hi], constant(0.5)),
        ],
        initial=[[lo + 0.1], [lo + 0.2], [hi + 0.1], [hi + 0.2],
                 [lo - 0.05], [lo + 0.05], [hi - 0.05], [hi + 0.05]],
        follower_betas=[constant(0.4), constant(0.0)],
        per_agent_betas={
            2: [constant(0.0), constant(0.4)],
            3: [constant(0.0), constant(0.4)],
        },
        horizon=80,
    )
    return cfg


def test_subsystems_converge_to_own_targets():
    sc = build_scenario(subsystem_config())
    rep = check_subsystem_independence(sc)
    assert rep.passed, rep.reason
    assert rep.params["cross_contacts"] == 0
    assert rep.params["delta_1"] < sc.epsilon and rep.params["delta_2"] < sc.epsilon
    assert rep.params["gamma_1"] == 0.6 and rep.params["gamma_2"] == 0.6


def test_subsystems_crosstalk_when_everything_visible():
    sc = build_scenario(subsystem_config(epsilon=5.0, targets=(0.0, 1.0)))
    rep = check_subsystem_independence(sc)
    assert rep.status == "skipped"
    assert rep.reason.startswith(CROSSTALK)


def test_single_subsystem_reduces_to_consensus_check():
    sc = consensus_demo()
    joint = run(sc)
    rep = check_subsystem_independence(sc, joint=joint)
    consensus = check_consensus_bound(joint)
    assert rep.passed and consensus.passed


def test_subsystem_assignment_fails_on_overlapping_betas():
    cfg = subsystem_config()
    cfg["schedules"]["crowd"]["betas"] = [constant(0.2), constant(0.2)]
    del cfg["schedules"]["crowd"]["per_agent"]
    rep = check_subsystem_independence(build_scenario(cfg))
    assert rep.status == "skipped"
    assert rep.reason.startswith(INAPPLICABLE)


def test_joint_run_equals_standalone_rerun_bitwise():
    from lfmix.analysis import subsystem_scenario

    sc = build_scenario(subsystem_config())
    joint = run(sc, 40, stop_tol=None)
    sub, originals = subsystem_scenario(sc, 1, [0, 1])
    alone = run(sub, 40, stop_tol=None)
    for t in range(41):
        assert np.array_equal(alone.states[t].opinions, joint.states[t].opinions[originals])
