from __future__ import annotations

import math

import pytest

from softhand_sim.calibration import (
    TARGET_FINGER_FORCE,
    TARGET_HOLDING_FORCE,
    CalibrationError,
    calibrate,
    holding_force,
    tuned,
)
from softhand_sim.grasp_engine import single_finger_press
from softhand_sim.hand_model import CALIBRATED_EFFICIENCY, CALIBRATED_PULLEY_RADIUS, load_hand_spec


def test_frozen_pair_hits_both_targets(calibrated):
    assert holding_force(calibrated) == pytest.approx(TARGET_HOLDING_FORCE, rel=0.02)
    assert single_finger_press(calibrated, "little") == pytest.approx(TARGET_FINGER_FORCE, rel=0.02)


def test_tuned_sets_both_parameters(config):
    cfg = tuned(config, 30.0, 0.7)
    assert cfg.actuator.pulley_radius == 30.0
    assert all(j.efficiency == 0.7 for f in cfg.fingers for j in f.joints)


def test_holding_grows_with_efficiency(config):
    assert holding_force(tuned(config, 40.0, 0.9)) > holding_force(tuned(config, 40.0, 0.6))


@pytest.mark.parametrize("holding, finger", [(0.0, 5.5), (19.8, -1.0)])
def test_rejects_non_positive_targets(config, holding, finger):
    with pytest.raises(ValueError):
        calibrate(config, holding, finger)


def test_unreachable_target_reports_curve(config):
    with pytest.raises(CalibrationError) as info:
        calibrate(config, target_holding=1e6)
    assert info.value.curve
    assert all(math.isnan(row[1]) for row in info.value.curve)


def test_cli_result_matches_frozen_constants(cli_calibration):
    code, out = cli_calibration
    assert code == 0
    cfg = load_hand_spec(out / "calibrated_hand.yaml")
    assert cfg.actuator.pulley_radius == pytest.approx(CALIBRATED_PULLEY_RADIUS, rel=0.01)
    assert cfg.fingers[0].joints[0].efficiency == pytest.approx(CALIBRATED_EFFICIENCY, rel=0.01)
