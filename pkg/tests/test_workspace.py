from __future__ import annotations

import numpy as np
import pytest

from softhand_sim.kinematics import HandState, couple_angles, finger_fk, hand_fk, joint_ratios
from softhand_sim.workspace import (
    CSV_HEADER,
    cloud_csv,
    cloud_svg,
    overlap_volume,
    rest_cloud,
    sample_workspace,
    stats_table,
    sweep_workspace,
    workspace_stats,
    zero_splay,
)


@pytest.fixture(scope="module")
def cloud(config):
    return sample_workspace(config, 10000, seed=0)


def test_single_sample_matches_fk(config):
    c = sample_workspace(config, 1, seed=3)
    for f in config.fingers:
        pose = finger_fk(f, c.angles[f.name][0])
        np.testing.assert_allclose(c.points[f.name][0], pose.joint_positions[-1], atol=1e-9)


def test_rest_cloud_is_rest_fk(config):
    rest = rest_cloud(config)
    poses = hand_fk(config, HandState.rest(config))
    for name, pose in poses.items():
        np.testing.assert_allclose(rest.points[name][0], pose.joint_positions[-1], atol=1e-9)


def test_samples_follow_coupling(config, cloud):
    for f in config.fingers:
        ang = cloud.angles[f.name]
        raw = ang[:, :1] * joint_ratios(f)
        free = ~cloud.clamped[f.name]
        np.testing.assert_allclose(ang[free], raw[free], atol=1e-12)
        np.testing.assert_allclose(ang[~free], np.broadcast_to(f.limits_rad, ang.shape)[~free])
        one = couple_angles(float(ang[0, 0]), f.joints)
        np.testing.assert_allclose(one, raw[0, 1:], rtol=1e-12)


def test_middle_depth_and_reach_against_sweep(config, cloud):
    stats = workspace_stats(cloud).fingers["middle"]
    sweep = workspace_stats(sweep_workspace(config, 20001)).fingers["middle"]
    assert stats.max_reach <= config.finger("middle").length + 1e-9
    assert 60.0 <= stats.flexion_depth <= 115.0
    assert stats.flexion_depth == pytest.approx(sweep.flexion_depth, abs=0.5)


def test_rest_span(config):
    stats = workspace_stats(rest_cloud(config))
    assert stats.thumb_little_centroid_distance == pytest.approx(215.0, abs=5.0)
    assert stats.fingers["middle"].bbox_volume == 0.0


def test_empty_cloud_rejected(config):
    with pytest.raises(ValueError):
        sample_workspace(config, 0, seed=0)


def test_default_splay_overlaps_more_than_parallel_fingers(config):
    a = overlap_volume(sample_workspace(config, 4000, seed=1))
    b = overlap_volume(sample_workspace(zero_splay(config), 4000, seed=1))
    assert a > b > 0


def test_seeds_agree_on_centroids(config, cloud):
    other = workspace_stats(sample_workspace(config, 10000, seed=1))
    base = workspace_stats(cloud)
    for name in config.finger_names:
        d = np.linalg.norm(base.fingers[name].centroid - other.fingers[name].centroid)
        assert d < 2.0


def test_csv_is_deterministic(config):
    a = cloud_csv(sample_workspace(config, 50, seed=7))
    b = cloud_csv(sample_workspace(config, 50, seed=7))
    assert a == b
    lines = a.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 50 * 5
    assert lines[1].startswith("thumb,0,") and lines[6].startswith("thumb,1,")


def test_renderings(config, cloud):
    svg = cloud_svg(cloud)
    assert svg.startswith("<svg") and "seed=0" in svg
    table = stats_table(workspace_stats(cloud))
    assert len(table.splitlines()) == 6
