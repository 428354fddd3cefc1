"""Joint coupling and forward kinematics of the finger chains.

Each finger is a planar chain in its own root frame: x runs along the straight
finger, y is the flexion direction and z the (shared) joint axis. The base
phalanx is a rigid offset from the root to the MCP joint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from .hand_model import FingerConfig, HandConfig, JointParams

BASE_COUPLING = 1.08
_ANGLE_TOL = 1e-9


class KinematicsError(ValueError):
    pass


def coupling_ratios(joints: Sequence[JointParams]) -> Tuple[float, float]:
    """(theta2/theta1, theta3/theta1) implied by the empirical coupling law."""
    m1, m2, m3 = (j.coupling_m for j in joints)
    if min(m1, m2, m3) <= 0:
        raise KinematicsError("coupling m values must be > 0")
    pip_ratio = BASE_COUPLING + abs((m1 - m2) / m2)
    # theta3 = (theta2/theta1 + |(m3 - m2)/m3|) * theta2, with theta2/theta1 constant
    dip_ratio = (pip_ratio + abs((m3 - m2) / m3)) * pip_ratio
    return pip_ratio, dip_ratio


def couple_angles(theta1: float, joints: Sequence[JointParams]) -> Tuple[float, float]:
    """PIP and DIP angles for an MCP angle ``theta1`` (rad). No limit clamping."""
    if theta1 < 0:
        raise KinematicsError("theta1 must be >= 0")
    pip_ratio, dip_ratio = coupling_ratios(joints)
    return pip_ratio * theta1, dip_ratio * theta1


def joint_ratios(finger: FingerConfig) -> np.ndarray:
    """Per-joint multiples of the MCP angle along the free coupling trajectory."""
    pip_ratio, dip_ratio = coupling_ratios(finger.joints)
    return np.array([1.0, pip_ratio, dip_ratio])


def coupled_clamped(theta1: float, finger: FingerConfig) -> np.ndarray:
    """Coupling trajectory with every joint held at its limit once reached."""
    return np.minimum(joint_ratios(finger) * theta1, np.array(finger.limits_rad))


@dataclass
class FingerPose:
    name: str
    joint_angles: np.ndarray  # (3,) rad
    root: np.ndarray  # (3,)
    joint_positions: np.ndarray  # (4, 3): MCP, PIP, DIP, fingertip
    radius: float
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    @property
    def fingertip(self) -> np.ndarray:
        return self.joint_positions[3]

    @property
    def phalanx_segments(self) -> np.ndarray:
        """(4, 2, 3) capsule axis endpoints: base, mid1, mid2, tip."""
        pts = np.vstack([self.root, self.joint_positions])
        return np.stack([pts[:-1], pts[1:]], axis=1)


def mount_rotation(finger: FingerConfig) -> np.ndarray:
    """Rotation whose columns are the root-frame x, y, z axes in the hand frame."""
    yaw = math.radians(finger.mount_yaw_deg)
    pitch = math.radians(finger.mount_pitch_deg)
    roll = math.radians(finger.mount_roll_deg)
    along = np.array([math.sin(yaw) * math.cos(pitch), math.cos(yaw) * math.cos(pitch), math.sin(pitch)])
    up = np.array([-math.sin(yaw) * math.sin(pitch), -math.cos(yaw) * math.sin(pitch), math.cos(pitch)])
    # in-palm direction to the left of the finger (toward -x for a finger pointing +y)
    side = np.array([-math.cos(yaw), math.sin(yaw), 0.0])
    side = side - along * (side @ along)
    side /= np.linalg.norm(side)
    flex = math.cos(roll) * up + math.sin(roll) * side
    axis = np.cross(along, flex)
    return np.column_stack([along, flex, axis])


def planar_chain(lengths: Sequence[float], angles: Sequence[float]) -> np.ndarray:
    """(4, 2) MCP, PIP, DIP and tip positions in the root frame's flexion plane."""
    phi = np.concatenate([[0.0], np.cumsum(angles)])
    steps = np.column_stack([np.cos(phi), np.sin(phi)]) * np.asarray(lengths, dtype=float)[:, None]
    return np.cumsum(steps, axis=0)


def check_angles(finger: FingerConfig, angles: Sequence[float]) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (3,):
        raise KinematicsError(f"{finger.name}: expected 3 joint angles")
    limits = np.array(finger.limits_rad)
    if np.any(angles < -_ANGLE_TOL) or np.any(angles > limits + _ANGLE_TOL):
        raise KinematicsError(
            f"{finger.name}: joint angles {np.degrees(angles).round(4).tolist()} deg "
            f"outside [0, {np.degrees(limits).tolist()}] deg"
        )
    return angles


def finger_fk(finger: FingerConfig, angles: Sequence[float], frame: str = "hand") -> FingerPose:
    """Joint and fingertip positions for (theta1, theta2, theta3) in rad.

    ``frame="root"`` returns the chain in the finger's own root frame, where the
    straight finger lies along +x from the origin.
    """
    angles = check_angles(finger, angles)
    planar = planar_chain(finger.phalanx_lengths, angles)
    local = np.column_stack([planar, np.zeros(4)])
    if frame == "root":
        return FingerPose(finger.name, angles, np.zeros(3), local, finger.phalanx_radius)
    if frame != "hand":
        raise ValueError(f"unknown frame {frame!r}")
    rot = mount_rotation(finger)
    root = np.asarray(finger.mount_position, dtype=float)
    return FingerPose(finger.name, angles, root, root + local @ rot.T, finger.phalanx_radius, rot[:, 2])


def fingertips(finger: FingerConfig, angles: np.ndarray) -> np.ndarray:
    """Hand-frame fingertip positions for a batch of joint triples, shape (n, 3) -> (n, 3)."""
    angles = np.asarray(angles, dtype=float)
    phi = np.cumsum(angles, axis=1)
    lengths = np.asarray(finger.phalanx_lengths, dtype=float)
    x = lengths[0] + np.cos(phi) @ lengths[1:]
    y = np.sin(phi) @ lengths[1:]
    local = np.column_stack([x, y, np.zeros_like(x)])
    return np.asarray(finger.mount_position, dtype=float) + local @ mount_rotation(finger).T


@dataclass
class HandState:
    """Actuator displacement plus the full joint configuration of the hand.

    Rows of ``angles`` and ``blocked`` follow ``config.fingers``; columns are
    MCP, PIP, DIP. ``tensions`` follows ``config.tendons``.
    """

    actuator_displacement: float
    angles: np.ndarray
    blocked: np.ndarray
    tensions: np.ndarray

    @classmethod
    def rest(cls, config: HandConfig) -> "HandState":
        n = len(config.fingers)
        return cls(0.0, np.zeros((n, 3)), np.zeros((n, 3), dtype=bool), np.zeros(len(config.tendons)))

    @classmethod
    def from_angles(cls, config: HandConfig, angles: Dict[str, Sequence[float]]) -> "HandState":
        state = cls.rest(config)
        for name, values in angles.items():
            state.angles[config.finger_index(name)] = values
        return state

    def copy(self) -> "HandState":
        return HandState(
            self.actuator_displacement, self.angles.copy(), self.blocked.copy(), self.tensions.copy()
        )

    def finger_angles(self, config: HandConfig, name: str) -> np.ndarray:
        return self.angles[config.finger_index(name)]


def hand_fk(config: HandConfig, state: HandState) -> Dict[str, FingerPose]:
    poses = {}
    for finger, angles in zip(config.fingers, state.angles):
        try:
            poses[finger.name] = finger_fk(finger, angles)
        except KinematicsError as exc:
            raise KinematicsError(f"finger {finger.name}: {exc}") from exc
    return poses


def rest_dimensions(config: HandConfig) -> Dict[str, float]:
    """Overall length (palm base -> middle tip) and thumb-little tip span at rest."""
    poses = hand_fk(config, HandState.rest(config))
    tips = {name: pose.fingertip for name, pose in poses.items()}
    return {
        "overall_length": float(tips["middle"][1]),
        "span": float(np.linalg.norm(tips["thumb"] - tips["little"])),
        "middle_finger_length": float(
            np.linalg.norm(tips["middle"] - np.asarray(config.finger("middle").mount_position))
        ),
    }
