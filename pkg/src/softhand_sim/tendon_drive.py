"""Tendon excursion, series-spring tension and joint torque balance.

All three tendons are knotted into one carrier, so they share the actuator
displacement; each has its own series spring between carrier and tendon.
Friction over the U-groove bearings is lumped into a per-joint efficiency that
compounds along the route (the tension reaching the n-th served joint is
``T * eta_1 * ... * eta_n``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .hand_model import JOINT_IDS, ActuatorParams, HandConfig, JointParams, TendonRoute
from .kinematics import HandState


class TendonConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TendonState:
    excursion: float  # mm
    tension: float  # N
    slack: bool


@dataclass(frozen=True)
class ActuatorState:
    displacement: float  # mm of tendon take-up at the coupling carrier
    torque: float = 0.0  # N*m
    pulley_radius: float = 10.0  # mm

    @property
    def force(self) -> float:
        return self.torque * 1000.0 / self.pulley_radius


def route_joints(route: TendonRoute, config: HandConfig) -> List[Tuple[int, int, JointParams]]:
    """(finger index, joint index, params) for each served joint, in route order."""
    out = []
    for finger, jid in route.served:
        try:
            fi = config.finger_index(finger)
            ji = JOINT_IDS.index(jid)
        except (KeyError, ValueError):
            raise TendonConfigError(f"tendon {route.tendon_id!r}: unknown joint ({finger}, {jid})") from None
        out.append((fi, ji, config.fingers[fi].joints[ji]))
    return out


def route_efficiencies(route: TendonRoute, config: HandConfig) -> np.ndarray:
    """Cumulative transmission efficiency seen at each served joint."""
    return np.cumprod([jp.efficiency for _, _, jp in route_joints(route, config)])


def tendon_excursion(route: TendonRoute, state: HandState, config: HandConfig) -> float:
    """Tendon shortening demanded by the current joint angles: sum of r * theta."""
    return float(sum(jp.moment_arm_m * state.angles[fi, ji] for fi, ji, jp in route_joints(route, config)))


def tendon_tension(route: TendonRoute, actuator: ActuatorState, excursion: float) -> float:
    stretch = actuator.displacement - excursion
    return max(0.0, route.spring_stiffness * stretch + route.pretension)


def tendon_state(route: TendonRoute, actuator: ActuatorState, excursion: float) -> TendonState:
    tension = tendon_tension(route, actuator, excursion)
    return TendonState(excursion, tension, tension == 0.0)


def joint_net_torque(joint: JointParams, tension: float, angle: float) -> float:
    """Tendon torque minus elastic-band restoring torque (N*mm); > 0 flexes."""
    restoring = joint.restoring_stiffness * (angle - joint.rest_angle) + joint.restoring_preload
    return tension * joint.moment_arm_m - restoring


def actuator_capacity(actuator: ActuatorParams) -> float:
    return actuator.capacity


def actuator_force_budget(config: HandConfig, tensions: Sequence[float]) -> Tuple[bool, float]:
    """(feasible, remaining force margin in N) for the summed tendon tensions."""
    margin = config.actuator.capacity - float(np.sum(tensions))
    return margin >= 0.0, margin
