from __future__ import annotations

from dataclasses import replace

import pytest
import yaml

from softhand_sim.hand_model import (
    HandSpecError,
    HandSpecParseError,
    config_to_dict,
    default_bpi_config,
    dump_hand_spec,
    load_hand_spec,
    parse_hand_spec,
    save_hand_spec,
)


def test_default_counts(config):
    assert len(config.fingers) == 5
    assert sum(len(f.joints) for f in config.fingers) == 15
    groups = [tuple(dict.fromkeys(f for f, _ in t.served)) for t in config.tendons]
    assert groups == [("thumb", "index"), ("middle", "third"), ("little",)]


def test_every_joint_on_exactly_one_tendon(config):
    served = [pair for t in config.tendons for pair in t.served]
    assert sorted(served) == sorted(config.iter_joints())


def test_straight_finger_length(config):
    for f in config.fingers:
        assert f.length == pytest.approx(115.0, abs=1e-12)


def test_actuator_capacity_default(config):
    assert config.actuator.capacity == pytest.approx(450.0)


def test_yaml_round_trip(config, tmp_path):
    path = tmp_path / "hand.yaml"
    save_hand_spec(config, path)
    assert load_hand_spec(path) == config
    assert dump_hand_spec(load_hand_spec(path)) == path.read_text()


def test_partial_spec_overrides_defaults():
    cfg = parse_hand_spec("actuator:\n  pulley_radius_mm: 20\nfingers:\n  index:\n    mount_yaw_deg: 3\n")
    assert cfg.actuator.pulley_radius == 20
    assert cfg.finger("index").mount_yaw_deg == 3
    assert cfg.finger("middle") == default_bpi_config().finger("middle")


def test_four_joint_finger_rejected():
    data = config_to_dict(default_bpi_config())
    data["fingers"]["middle"]["joints"].append(dict(data["fingers"]["middle"]["joints"][0]))
    with pytest.raises(HandSpecError) as err:
        parse_hand_spec(yaml.safe_dump(data))
    assert err.value.path == "fingers.middle.joints"
    assert "exactly 3 joints" in str(err.value)


@pytest.mark.parametrize(
    "text, path",
    [
        ("actuator:\n  pulley_radius_mm: -1\n", "actuator.pulley_radius_mm"),
        ("fingers:\n  index:\n    joints: [{}, {efficiency: 1.5}, {}]\n", "fingers.index.joints[1].efficiency"),
        ("fingers:\n  pinky: {}\n", "fingers.pinky"),
        ("palm:\n  colour: red\n", "palm.colour"),
        ("fingers:\n  index:\n    joints: [{coupling_m_mm: 0}, {}, {}]\n", "fingers.index.joints[0].coupling_m_mm"),
    ],
)
def test_validation_names_field(text, path):
    with pytest.raises(HandSpecError) as err:
        parse_hand_spec(text)
    assert err.value.path == path


def test_unserved_joint_rejected(config):
    tendons = (replace(config.tendons[0], served=config.tendons[0].served[:-1]),) + config.tendons[1:]
    with pytest.raises(HandSpecError):
        replace(config, tendons=tendons).validate()


def test_malformed_yaml():
    with pytest.raises(HandSpecParseError):
        parse_hand_spec("fingers: [unclosed")


def test_with_efficiency_sets_all_joints(config):
    cfg = config.with_efficiency(0.7)
    assert {j.efficiency for f in cfg.fingers for j in f.joints} == {0.7}
