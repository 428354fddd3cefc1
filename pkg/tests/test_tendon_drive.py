from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softhand_sim.hand_model import JointParams, TendonRoute
from softhand_sim.kinematics import HandState
from softhand_sim.tendon_drive import (
    ActuatorState,
    TendonConfigError,
    actuator_force_budget,
    joint_net_torque,
    route_efficiencies,
    tendon_excursion,
    tendon_state,
    tendon_tension,
)


def test_excursion_rest_is_zero(config):
    state = HandState.rest(config)
    assert all(tendon_excursion(t, state, config) == 0.0 for t in config.tendons)


def test_excursion_single_joint(config):
    route = TendonRoute("t", (("middle", "MCP"),))
    state = HandState.from_angles(config, {"middle": [0.1, 0.0, 0.0]})
    assert tendon_excursion(route, state, config) == pytest.approx(0.5)


def test_excursion_three_joints(config):
    route = TendonRoute("t", (("middle", "MCP"), ("middle", "PIP"), ("middle", "DIP")))
    state = HandState.from_angles(config, {"middle": [0.1, 0.108, 0.11664]})
    assert tendon_excursion(route, state, config) == pytest.approx(1.6232, abs=1e-12)


def test_excursion_unknown_joint(config):
    route = TendonRoute("t", (("pinky", "MCP"),))
    with pytest.raises(TendonConfigError):
        tendon_excursion(route, HandState.rest(config), config)


@pytest.mark.parametrize(
    "k, x, e, p, expected",
    [(2.0, 4.0, 3.0, 0.0, 2.0), (2.0, 2.0, 3.0, 0.0, 0.0), (1.5, 10.0, 6.0, 1.0, 7.0)],
)
def test_tension_law(k, x, e, p, expected):
    route = TendonRoute("t", (("middle", "MCP"),), spring_stiffness=k, pretension=p)
    assert tendon_tension(route, ActuatorState(x), e) == pytest.approx(expected)


def test_slack_flag():
    route = TendonRoute("t", (("middle", "MCP"),))
    assert tendon_state(route, ActuatorState(2.0), 3.0).slack
    assert not tendon_state(route, ActuatorState(4.0), 3.0).slack


def test_net_torque_examples():
    j = JointParams("MCP", moment_arm_m=5.0, restoring_stiffness=7.84)
    assert joint_net_torque(j, 0.0, 0.0) == 0.0
    assert joint_net_torque(j, 10.0, 1.0) == pytest.approx(42.16)
    assert joint_net_torque(j, 0.0, math.radians(90)) < 0


def test_force_budget(config):
    assert actuator_force_budget(config, (0, 0, 0)) == (True, pytest.approx(450.0))
    ok, margin = actuator_force_budget(config, (100, 100, 100))
    assert ok and margin == pytest.approx(150.0)
    assert not actuator_force_budget(config, (151, 150, 150))[0]


def test_actuator_force():
    assert ActuatorState(0.0, torque=4.5, pulley_radius=10.0).force == pytest.approx(450.0)


def test_efficiency_compounds_along_route(config):
    eff = route_efficiencies(config.tendons[2], config.with_efficiency(0.9))
    np.testing.assert_allclose(eff, [0.9, 0.81, 0.729])


def test_torque_ratio_equals_arm_ratio():
    # joints on one tendon share the tension: torques scale with the moment arms
    a = JointParams("MCP", moment_arm_m=5.0, restoring_stiffness=0.0)
    b = JointParams("PIP", moment_arm_m=3.0, restoring_stiffness=0.0)
    assert joint_net_torque(a, 12.0, 0.3) / joint_net_torque(b, 12.0, 0.7) == pytest.approx(5.0 / 3.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0, 100), st.floats(0, 100), st.floats(0, 5))
def test_tension_never_negative(k, x, e, p):
    route = TendonRoute("t", (("middle", "MCP"),), spring_stiffness=k, pretension=p)
    assert tendon_tension(route, ActuatorState(x), e) >= 0.0
