from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from softhand_sim.geometry import Box, Sphere
from softhand_sim.grasp_engine import (
    BISECTION_TOL,
    ClosureError,
    Contact,
    GraspObject,
    GraspReport,
    close_hand,
    contact_normal_force,
    detect_contacts,
    grasp_success,
    has_opposition,
    run_bench,
    single_finger_press,
)
from softhand_sim.hand_model import TendonRoute, route_for
from softhand_sim.kinematics import HandState, hand_fk, joint_ratios
from softhand_sim.objects import builtin


@pytest.fixture(scope="module")
def free(config):
    return close_hand(config, None)


@pytest.fixture(scope="module")
def sphere(config):
    return close_hand(config, builtin("sphere60"))


def test_normal_force_example(config):
    state = HandState.rest(config)
    state.tensions[:] = [0.0, 20.0, 0.0]
    pose = hand_fk(config, state)["middle"]
    point = pose.joint_positions[0] + np.array([0.0, 10.0, 0.0])  # 10 mm along the phalanx from MCP
    c = Contact("middle", 1, point, np.array([0.0, 0.0, 1.0]), 0.0)
    assert contact_normal_force(config, state, c) == pytest.approx(10.0)
    state.tensions[:] = 0.0
    assert contact_normal_force(config, state, c) == 0.0


def test_degenerate_lever_warns_and_is_excluded(config):
    state = HandState.rest(config)
    state.tensions[:] = 10.0
    pose = hand_fk(config, state)["middle"]
    c = Contact("middle", 1, pose.joint_positions[0] + np.array([0.3, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]), 0.0)
    assert contact_normal_force(config, state, c) is None
    report = GraspReport([c], 1, frozenset(), state, 0.0, False)
    from softhand_sim.grasp_engine import estimate_holding_force

    with pytest.warns(RuntimeWarning, match="degenerate lever"):
        assert estimate_holding_force(report, config) == 0.0
    assert c.normal_force == 0.0


def test_free_closure_reaches_limits(config, free):
    report, trace = free
    assert report.fingers_in_contact == 0 and not report.contacts
    limits = np.array([f.limits_rad for f in config.fingers])
    np.testing.assert_allclose(report.final_state.angles, limits, atol=1e-9)
    assert report.termination == "force_budget"
    assert report.final_state.tensions.sum() == pytest.approx(config.actuator.capacity, rel=1e-9)


def test_free_closure_follows_coupling(config, free):
    # every joint sits at ratio * progress unless it is held at its limit
    _, trace = free
    for rec in trace.records:
        for f, ang in zip(config.fingers, rec.state.angles):
            ratios, limits = joint_ratios(f), np.array(f.limits_rad)
            s = (ang / ratios).max()
            np.testing.assert_allclose(ang, np.minimum(ratios * s, limits), atol=1e-9)


def test_trace_monotone(free, sphere):
    for _, trace in (free, sphere):
        x = trace.displacements
        assert np.all(np.diff(x) > 0)
        assert np.all(np.diff(trace.angles, axis=0) >= -1e-12)
        assert np.all(trace.tensions >= 0)


def test_sphere_five_contacts(sphere):
    report, _ = sphere
    assert report.fingers_in_contact == 5
    assert report.success
    assert all(c.normal_force >= 0 for c in report.contacts)


def test_blocked_joints_stay_put(config, sphere):
    report, trace = sphere
    angles = trace.angles
    for fi, f in enumerate(config.fingers):
        for c in report.contacts_of(f.name):
            k = next(i for i, r in enumerate(trace.records) if r.displacement >= c.displacement)
            for j in range(c.phalanx):
                assert np.all(angles[k:, fi, j] == angles[k, fi, j])


def test_contacts_have_small_penetration(config, sphere):
    report, _ = sphere
    poses = hand_fk(config, report.final_state)
    for c in detect_contacts(poses, builtin("sphere60")):
        assert c.penetration < 0.05  # mm: bisection tolerance in displacement maps to tiny overlap


def test_step_halving_is_stable(config):
    obj = builtin("small_spool")
    a, _ = close_hand(config, obj, step=0.05)
    b, _ = close_hand(config, obj, step=0.025)
    assert a.fingers_in_contact == b.fingers_in_contact
    assert np.abs(a.final_state.angles - b.final_state.angles).max() < 2 * BISECTION_TOL


def test_soft_synergy_differential(config):
    # a pad pins the little finger early; the other tendons keep taking up excursion
    pad = GraspObject("pad", (Box((-44.0, 120.0, 35.0), (8.0, 15.0, 5.0)),))
    report, trace = close_hand(config, pad)
    assert [c.finger for c in report.contacts] == ["little"]
    t_contact = report.contacts[0].displacement
    mcp_limit = config.finger("middle").limits_rad[0]
    later = [r for r in trace.records if r.displacement > t_contact and r.state.angles[2, 0] < mcp_limit]
    little_t = np.array([r.state.tensions[config.tendon_of("little")] for r in later])
    mids = np.array([r.state.angles[2].sum() for r in later])
    assert len(later) > 5
    assert np.all(np.diff(little_t) > 0)
    assert np.all(np.diff(mids) > 0)


def test_pretension_over_budget_raises(config):
    tendons = tuple(replace(t, pretension=5000.0) for t in config.tendons)
    with pytest.raises(ClosureError):
        close_hand(replace(config, tendons=tendons), None)


def test_success_needs_two_fingers_and_opposition():
    up = np.array([0.0, 0.0, 1.0])
    one = [Contact("index", 3, np.zeros(3), up, 0.0)]
    assert not has_opposition(one)
    same = one + [Contact("middle", 3, np.zeros(3), up, 0.0)]
    assert not has_opposition(same)
    opp = one + [Contact("thumb", 3, np.zeros(3), -up, 0.0)]
    assert has_opposition(opp)
    obj = GraspObject("o", (Sphere((0.0, 0.0, 0.0), 1.0),), 100.0)
    report = GraspReport(opp, 2, frozenset(), None, 1.5 * obj.weight, False)
    assert grasp_success(report, obj)
    report.holding_force = 1.49 * obj.weight
    assert not grasp_success(report, obj)


def test_press_zero_torque(config):
    weak = config.with_actuator(max_torque=0.0)
    assert single_finger_press(weak, "little") == 0.0


def test_press_shared_tendon_middle_vs_little(config):
    # middle and little on one tendon, identical joints, lossless transmission
    tendons = (route_for("thumb_index", ("thumb", "index")), route_for("third", ("third",)),
               route_for("middle_little", ("middle", "little")))
    cfg = replace(config, tendons=tendons)
    m = single_finger_press(cfg, "middle")
    li = single_finger_press(cfg, "little")
    assert m > 0 and li > 0
    assert abs(m - li) / max(m, li) < 0.15


def test_press_calibrated_little(calibrated):
    assert single_finger_press(calibrated, "little") == pytest.approx(5.5, rel=0.2)


def test_holding_monotone_in_torque(calibrated):
    obj = builtin("trapezoid")
    base = close_hand(calibrated, obj)[0].holding_force
    double = close_hand(calibrated.with_actuator(max_torque=9.0), obj)[0].holding_force
    assert double > base


def test_bench_sphere_deterministic(config):
    rows = run_bench(config, [builtin("sphere60")], trials=5, pose_jitter=(0.0, 0.0))
    assert rows[0].successes == 5 and rows[0].mean_contacts == 5.0


def test_bench_card_fails(config):
    rows = run_bench(config, [builtin("card3mm")], trials=5)
    assert rows[0].successes == 0


def test_bench_threads_do_not_change_results(config):
    corpus = [builtin("mouse"), builtin("tape")]
    a = run_bench(config, corpus, trials=3, seed=11, threads=1)
    b = run_bench(config, corpus, trials=3, seed=11, threads=3)
    assert a == b


def test_bench_rejects_bad_input(config):
    with pytest.raises(ValueError):
        run_bench(config, [], trials=5)
    with pytest.raises(ValueError):
        run_bench(config, [builtin("tape")], trials=0)
