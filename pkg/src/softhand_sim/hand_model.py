"""Parametric hand description, the built-in BPI SoftHand defaults and hand-spec I/O.

Hand frame (all lengths in mm):
  origin : centre of the palm base edge
  +x     : across the palm toward the thumb side
  +y     : along the palm toward the fingers
  +z     : palm normal, pointing to the grasping side (palm surface is z = 0)

Angles are stored in degrees on the config objects (that is what hand-spec files
carry, so files round-trip exactly); the ``*_rad`` properties give radians for
the numerical code.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import yaml

JOINT_IDS: Tuple[str, ...] = ("MCP", "PIP", "DIP")
FINGER_NAMES: Tuple[str, ...] = ("thumb", "index", "middle", "third", "little")


class HandSpecError(ValueError):
    """A hand spec violates an invariant. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class HandSpecParseError(HandSpecError):
    """The hand-spec file could not be parsed at all."""


@dataclass(frozen=True)
class JointParams:
    joint_id: str
    moment_arm_m: float = 5.0  # mm
    coupling_m: float = 5.0  # mm
    rest_angle_deg: float = 0.0
    limit_angle_deg: float = 90.0
    restoring_stiffness: float = 7.84  # N*mm/rad
    restoring_preload: float = 0.0  # N*mm
    efficiency: float = 1.0  # lumped bearing friction, 0..1

    @property
    def rest_angle(self) -> float:
        return math.radians(self.rest_angle_deg)

    @property
    def limit_angle(self) -> float:
        return math.radians(self.limit_angle_deg)

    def validate(self, path: str = "joint") -> None:
        if self.joint_id not in JOINT_IDS:
            raise HandSpecError(f"{path}.id", f"unknown joint id {self.joint_id!r}")
        if not self.moment_arm_m > 0:
            raise HandSpecError(f"{path}.moment_arm_mm", "moment arm must be > 0")
        if not self.coupling_m > 0:
            raise HandSpecError(f"{path}.coupling_m_mm", "coupling m must be > 0")
        if not 0 <= self.rest_angle_deg < self.limit_angle_deg <= 180:
            raise HandSpecError(
                f"{path}.limit_angle_deg", "need 0 <= rest angle < limit angle <= 180 deg"
            )
        if not self.restoring_stiffness >= 0:
            raise HandSpecError(
                f"{path}.restoring_stiffness_Nmm_per_rad", "restoring stiffness must be >= 0"
            )
        if not 0 < self.efficiency <= 1:
            raise HandSpecError(f"{path}.efficiency", "efficiency must be in (0, 1]")


@dataclass(frozen=True)
class FingerConfig:
    """One modular finger: a rigid base phalanx followed by an MCP-PIP-DIP chain.

    ``mount_yaw_deg`` is the in-palm angle of the finger axis measured from +y,
    positive toward the thumb side (+x). ``mount_pitch_deg`` lifts the axis out
    of the palm plane and ``mount_roll_deg`` turns the flexion plane about the
    finger axis toward the palm centre (used for thumb opposition).
    """

    name: str
    mount_position: Tuple[float, float, float]
    mount_yaw_deg: float
    mount_pitch_deg: float = 0.0
    mount_roll_deg: float = 0.0
    phalanx_lengths: Tuple[float, float, float, float] = (35.0, 30.0, 25.0, 25.0)
    phalanx_radius: float = 8.0
    joints: Tuple[JointParams, JointParams, JointParams] = ()  # type: ignore[assignment]

    @property
    def length(self) -> float:
        return float(sum(self.phalanx_lengths))

    @property
    def limits_rad(self) -> Tuple[float, float, float]:
        return tuple(j.limit_angle for j in self.joints)  # type: ignore[return-value]

    def joint(self, joint_id: str) -> JointParams:
        return self.joints[JOINT_IDS.index(joint_id)]

    def validate(self, path: str = "finger") -> None:
        if self.name not in FINGER_NAMES:
            raise HandSpecError(f"{path}", f"unknown finger name {self.name!r}")
        if len(self.mount_position) != 3:
            raise HandSpecError(f"{path}.mount_position_mm", "expected 3 coordinates")
        if len(self.phalanx_lengths) != 4:
            raise HandSpecError(f"{path}.phalanx_lengths_mm", "finger must have exactly 4 phalanges")
        if any(not length > 0 for length in self.phalanx_lengths):
            raise HandSpecError(f"{path}.phalanx_lengths_mm", "phalanx lengths must be > 0")
        if not self.phalanx_radius > 0:
            raise HandSpecError(f"{path}.phalanx_radius_mm", "phalanx radius must be > 0")
        if len(self.joints) != 3:
            raise HandSpecError(f"{path}.joints", "finger must have exactly 3 joints")
        for i, (jp, jid) in enumerate(zip(self.joints, JOINT_IDS)):
            if jp.joint_id != jid:
                raise HandSpecError(f"{path}.joints[{i}].id", f"expected {jid}, got {jp.joint_id}")
            jp.validate(f"{path}.joints[{i}]")


@dataclass(frozen=True)
class TendonRoute:
    tendon_id: str
    served: Tuple[Tuple[str, str], ...]  # ordered (finger, joint_id) along the tendon path
    spring_stiffness: float = 2.0  # N/mm
    pretension: float = 0.0  # N

    @property
    def fingers(self) -> Tuple[str, ...]:
        seen: List[str] = []
        for finger, _ in self.served:
            if finger not in seen:
                seen.append(finger)
        return tuple(seen)


@dataclass(frozen=True)
class ActuatorParams:
    max_torque: float = 4.5  # N*m
    pulley_radius: float = 10.0  # mm

    @property
    def capacity(self) -> float:
        """Total tendon force available at the coupling mechanism (N)."""
        return self.max_torque * 1000.0 / self.pulley_radius


@dataclass(frozen=True)
class HandConfig:
    fingers: Tuple[FingerConfig, ...]
    tendons: Tuple[TendonRoute, ...]
    actuator: ActuatorParams = field(default_factory=ActuatorParams)
    palm_width: float = 90.0
    palm_length: float = 91.0
    overall_length_rest: float = 200.0
    rest_span: float = 215.0
    friction_coefficient: float = 0.8

    @property
    def finger_names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.fingers)

    def finger(self, name: str) -> FingerConfig:
        for f in self.fingers:
            if f.name == name:
                return f
        raise KeyError(f"no finger named {name!r}")

    def finger_index(self, name: str) -> int:
        try:
            return self.finger_names.index(name)
        except ValueError:
            raise KeyError(f"no finger named {name!r}") from None

    def iter_joints(self) -> Iterator[Tuple[str, str]]:
        for f in self.fingers:
            for jid in JOINT_IDS:
                yield f.name, jid

    def tendon_of(self, finger: str, joint_id: str = "MCP") -> int:
        for i, route in enumerate(self.tendons):
            if (finger, joint_id) in route.served:
                return i
        raise KeyError(f"({finger}, {joint_id}) is not served by any tendon")

    def with_actuator(self, **changes: float) -> "HandConfig":
        return replace(self, actuator=replace(self.actuator, **changes))

    def with_efficiency(self, efficiency: float) -> "HandConfig":
        """Same hand with every joint's transmission efficiency set to ``efficiency``."""
        fingers = tuple(
            replace(f, joints=tuple(replace(j, efficiency=efficiency) for j in f.joints))
            for f in self.fingers
        )
        return replace(self, fingers=fingers)

    def replace_finger(self, name: str, **changes: Any) -> "HandConfig":
        fingers = tuple(replace(f, **changes) if f.name == name else f for f in self.fingers)
        return replace(self, fingers=fingers)

    def validate(self) -> None:
        names = self.finger_names
        if sorted(names) != sorted(FINGER_NAMES):
            raise HandSpecError("fingers", f"need exactly the five fingers {FINGER_NAMES}")
        for f in self.fingers:
            f.validate(f"fingers.{f.name}")
        for key in ("palm_width", "palm_length", "overall_length_rest", "rest_span"):
            if not getattr(self, key) > 0:
                raise HandSpecError(key, "must be > 0")
        if not self.friction_coefficient >= 0:
            raise HandSpecError("friction_coefficient", "must be >= 0")
        if not 0.75 <= self.actuator.max_torque <= 4.5:
            raise HandSpecError("actuator.max_torque_Nm", "max torque must lie in [0.75, 4.5] N*m")
        if not self.actuator.pulley_radius > 0:
            raise HandSpecError("actuator.pulley_radius_mm", "pulley radius must be > 0")
        if not self.tendons:
            raise HandSpecError("tendons", "at least one tendon is required")
        served: Dict[Tuple[str, str], str] = {}
        for i, route in enumerate(self.tendons):
            path = f"tendons[{i}]"
            if not route.spring_stiffness > 0:
                raise HandSpecError(f"{path}.spring_stiffness_N_per_mm", "must be > 0")
            if not route.pretension >= 0:
                raise HandSpecError(f"{path}.pretension_N", "must be >= 0")
            for finger, jid in route.served:
                if finger not in names or jid not in JOINT_IDS:
                    raise HandSpecError(f"{path}.served", f"unknown joint ({finger}, {jid})")
                if (finger, jid) in served:
                    raise HandSpecError(
                        f"{path}.served",
                        f"({finger}, {jid}) already served by tendon {served[(finger, jid)]!r}",
                    )
                served[(finger, jid)] = route.tendon_id
        missing = [pair for pair in self.iter_joints() if pair not in served]
        if missing:
            raise HandSpecError("tendons", f"joints not served by any tendon: {missing}")


# --------------------------------------------------------------------------- defaults

# Joint limits are not published; these give a closed fist at full travel.
_DEFAULT_LIMITS_DEG = {"MCP": 90.0, "PIP": 100.0, "DIP": 80.0}
# 0.49 N/mm band acting on a 4 mm groove arm, linearised: 0.49 * 4**2.
_DEFAULT_BAND_STIFFNESS = 0.49 * 4.0**2

# (mount position, yaw, pitch, roll). Finger roots sit one phalanx radius below
# the palm surface so a straight finger is flush with it. Roots are placed so the
# rest pose measures 200 mm palm base -> middle tip and 215 mm thumb -> little.
_DEFAULT_MOUNTS: Dict[str, Tuple[Tuple[float, float, float], float, float, float]] = {
    "thumb": ((32.0, 20.0, -8.0), 58.0, 0.0, 70.0),
    "index": ((22.0, 81.0, -8.0), 10.0, 0.0, 0.0),
    "middle": ((5.0, 85.0, -8.0), 0.0, 0.0, 0.0),
    "third": ((-12.0, 82.0, -8.0), -9.0, 0.0, 0.0),
    "little": ((-31.0, 72.0, -8.0), -12.0, 0.0, 0.0),
}

DEFAULT_TENDON_GROUPS: Tuple[Tuple[str, Tuple[str, ...]], ...] = (
    ("thumb_index", ("thumb", "index")),
    ("middle_third", ("middle", "third")),
    ("little", ("little",)),
)


def default_joints() -> Tuple[JointParams, JointParams, JointParams]:
    return tuple(  # type: ignore[return-value]
        JointParams(
            joint_id=jid,
            limit_angle_deg=_DEFAULT_LIMITS_DEG[jid],
            restoring_stiffness=_DEFAULT_BAND_STIFFNESS,
        )
        for jid in JOINT_IDS
    )


def route_for(tendon_id: str, fingers: Sequence[str], **kwargs: float) -> TendonRoute:
    served = tuple((f, jid) for f in fingers for jid in JOINT_IDS)
    return TendonRoute(tendon_id=tendon_id, served=served, **kwargs)


def default_bpi_config() -> HandConfig:
    """The canonical BRL/Pisa/IIT SoftHand: 5 fingers x 3 joints on 3 tendons."""
    fingers = tuple(
        FingerConfig(
            name=name,
            mount_position=pos,
            mount_yaw_deg=yaw,
            mount_pitch_deg=pitch,
            mount_roll_deg=roll,
            joints=default_joints(),
        )
        for name, (pos, yaw, pitch, roll) in _DEFAULT_MOUNTS.items()
    )
    tendons = tuple(route_for(tid, group) for tid, group in DEFAULT_TENDON_GROUPS)
    return HandConfig(fingers=fingers, tendons=tendons)


# Frozen result of calibrating the default hand against the block holding force
# (19.8 N) and the little-finger press (5.5 N); rerun with ``softhand-sim calibrate``.
CALIBRATED_PULLEY_RADIUS = 46.7  # mm
CALIBRATED_EFFICIENCY = 0.8


def calibrated_bpi_config() -> HandConfig:
    return default_bpi_config().with_actuator(pulley_radius=CALIBRATED_PULLEY_RADIUS).with_efficiency(
        CALIBRATED_EFFICIENCY
    )


# --------------------------------------------------------------------------- file format

def _joint_to_dict(j: JointParams) -> Dict[str, Any]:
    return {
        "id": j.joint_id,
        "moment_arm_mm": j.moment_arm_m,
        "coupling_m_mm": j.coupling_m,
        "rest_angle_deg": j.rest_angle_deg,
        "limit_angle_deg": j.limit_angle_deg,
        "restoring_stiffness_Nmm_per_rad": j.restoring_stiffness,
        "restoring_preload_Nmm": j.restoring_preload,
        "efficiency": j.efficiency,
    }


def config_to_dict(config: HandConfig) -> Dict[str, Any]:
    """Full, explicit hand-spec mapping for ``config`` (inverse of ``config_from_dict``)."""
    return {
        "palm": {"width_mm": config.palm_width, "length_mm": config.palm_length},
        "rest_dimensions": {
            "overall_length_mm": config.overall_length_rest,
            "span_mm": config.rest_span,
        },
        "actuator": {
            "max_torque_Nm": config.actuator.max_torque,
            "pulley_radius_mm": config.actuator.pulley_radius,
        },
        "friction_coefficient": config.friction_coefficient,
        "fingers": {
            f.name: {
                "mount_position_mm": list(f.mount_position),
                "mount_yaw_deg": f.mount_yaw_deg,
                "mount_pitch_deg": f.mount_pitch_deg,
                "mount_roll_deg": f.mount_roll_deg,
                "phalanx_lengths_mm": list(f.phalanx_lengths),
                "phalanx_radius_mm": f.phalanx_radius,
                "joints": [_joint_to_dict(j) for j in f.joints],
            }
            for f in config.fingers
        },
        "tendons": [
            {
                "id": t.tendon_id,
                "served": [[finger, jid] for finger, jid in t.served],
                "spring_stiffness_N_per_mm": t.spring_stiffness,
                "pretension_N": t.pretension,
            }
            for t in config.tendons
        ],
    }


def _merge(base: Any, override: Any) -> Any:
    if isinstance(base, dict) and isinstance(override, dict):
        out = dict(base)
        for key, value in override.items():
            out[key] = _merge(base[key], value) if key in base else value
        return out
    return copy.deepcopy(override)


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise HandSpecError(path, f"expected a number, got {value!r}")
    return float(value)


def _mapping(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise HandSpecError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _check_keys(data: Mapping[str, Any], allowed: Sequence[str], path: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        prefix = f"{path}." if path else ""
        raise HandSpecError(f"{prefix}{unknown[0]}", "unknown field")


_JOINT_KEYS = (
    "id", "moment_arm_mm", "coupling_m_mm", "rest_angle_deg", "limit_angle_deg",
    "restoring_stiffness_Nmm_per_rad", "restoring_preload_Nmm", "efficiency",
)
_FINGER_KEYS = (
    "mount_position_mm", "mount_yaw_deg", "mount_pitch_deg", "mount_roll_deg",
    "phalanx_lengths_mm", "phalanx_radius_mm", "joints",
)


def _parse_joint(data: Any, path: str) -> JointParams:
    data = _mapping(data, path)
    _check_keys(data, _JOINT_KEYS, path)
    return JointParams(
        joint_id=str(data["id"]),
        moment_arm_m=_num(data["moment_arm_mm"], f"{path}.moment_arm_mm"),
        coupling_m=_num(data["coupling_m_mm"], f"{path}.coupling_m_mm"),
        rest_angle_deg=_num(data["rest_angle_deg"], f"{path}.rest_angle_deg"),
        limit_angle_deg=_num(data["limit_angle_deg"], f"{path}.limit_angle_deg"),
        restoring_stiffness=_num(
            data["restoring_stiffness_Nmm_per_rad"], f"{path}.restoring_stiffness_Nmm_per_rad"
        ),
        restoring_preload=_num(data["restoring_preload_Nmm"], f"{path}.restoring_preload_Nmm"),
        efficiency=_num(data["efficiency"], f"{path}.efficiency"),
    )


def _vector(value: Any, n: int, path: str) -> Tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise HandSpecError(path, f"expected a list of {n} numbers")
    out = tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(value))
    return out


def _parse_finger(name: str, data: Any, default: Mapping[str, Any], path: str) -> FingerConfig:
    data = _mapping(data, path)
    _check_keys(data, _FINGER_KEYS, path)
    joints_in = data.get("joints")
    merged = _merge(default, {k: v for k, v in data.items() if k != "joints"})
    if joints_in is None:
        joints_raw = default["joints"]
    else:
        if not isinstance(joints_in, list) or len(joints_in) != 3:
            raise HandSpecError(f"{path}.joints", "finger must have exactly 3 joints")
        joints_raw = []
        for i, (base, override) in enumerate(zip(default["joints"], joints_in)):
            joints_raw.append(_merge(base, _mapping(override, f"{path}.joints[{i}]")))
    position = _vector(merged["mount_position_mm"], 3, f"{path}.mount_position_mm")
    lengths = _vector(merged["phalanx_lengths_mm"], 4, f"{path}.phalanx_lengths_mm")
    return FingerConfig(
        name=name,
        mount_position=position,  # type: ignore[arg-type]
        mount_yaw_deg=_num(merged["mount_yaw_deg"], f"{path}.mount_yaw_deg"),
        mount_pitch_deg=_num(merged["mount_pitch_deg"], f"{path}.mount_pitch_deg"),
        mount_roll_deg=_num(merged["mount_roll_deg"], f"{path}.mount_roll_deg"),
        phalanx_lengths=lengths,  # type: ignore[arg-type]
        phalanx_radius=_num(merged["phalanx_radius_mm"], f"{path}.phalanx_radius_mm"),
        joints=tuple(_parse_joint(j, f"{path}.joints[{i}]") for i, j in enumerate(joints_raw)),  # type: ignore[arg-type]
    )


def _parse_tendon(data: Any, path: str) -> TendonRoute:
    data = _mapping(data, path)
    _check_keys(
        data, ("id", "served", "fingers", "spring_stiffness_N_per_mm", "pretension_N"), path
    )
    if "id" not in data:
        raise HandSpecError(f"{path}.id", "tendon id is required")
    if ("served" in data) == ("fingers" in data):
        raise HandSpecError(path, "give exactly one of 'served' or 'fingers'")
    if "fingers" in data:
        fingers = data["fingers"]
        if not isinstance(fingers, list) or not fingers:
            raise HandSpecError(f"{path}.fingers", "expected a non-empty list of finger names")
        served = tuple((str(f), jid) for f in fingers for jid in JOINT_IDS)
    else:
        raw = data["served"]
        if not isinstance(raw, list) or not raw:
            raise HandSpecError(f"{path}.served", "expected a non-empty list of [finger, joint]")
        pairs = []
        for i, item in enumerate(raw):
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise HandSpecError(f"{path}.served[{i}]", "expected [finger, joint]")
            pairs.append((str(item[0]), str(item[1])))
        served = tuple(pairs)
    return TendonRoute(
        tendon_id=str(data["id"]),
        served=served,
        spring_stiffness=_num(
            data.get("spring_stiffness_N_per_mm", 2.0), f"{path}.spring_stiffness_N_per_mm"
        ),
        pretension=_num(data.get("pretension_N", 0.0), f"{path}.pretension_N"),
    )


def config_from_dict(data: Optional[Mapping[str, Any]]) -> HandConfig:
    """Build and validate a config; absent fields come from the BPI default."""
    if data is None:
        data = {}
    data = _mapping(data, "")
    _check_keys(
        data,
        ("palm", "rest_dimensions", "actuator", "friction_coefficient", "fingers", "tendons"),
        "",
    )
    default = config_to_dict(default_bpi_config())

    palm = _merge(default["palm"], _mapping(data.get("palm", {}), "palm"))
    _check_keys(palm, ("width_mm", "length_mm"), "palm")
    rest = _merge(
        default["rest_dimensions"], _mapping(data.get("rest_dimensions", {}), "rest_dimensions")
    )
    _check_keys(rest, ("overall_length_mm", "span_mm"), "rest_dimensions")
    act = _merge(default["actuator"], _mapping(data.get("actuator", {}), "actuator"))
    _check_keys(act, ("max_torque_Nm", "pulley_radius_mm"), "actuator")

    fingers_in = _mapping(data.get("fingers", {}), "fingers")
    for name in fingers_in:
        if name not in FINGER_NAMES:
            raise HandSpecError(f"fingers.{name}", "unknown finger name")
    fingers = tuple(
        _parse_finger(name, fingers_in.get(name, {}), default["fingers"][name], f"fingers.{name}")
        for name in FINGER_NAMES
    )

    if "tendons" in data:
        raw = data["tendons"]
        if not isinstance(raw, list):
            raise HandSpecError("tendons", "expected a list")
        tendons = tuple(_parse_tendon(t, f"tendons[{i}]") for i, t in enumerate(raw))
    else:
        tendons = default_bpi_config().tendons

    config = HandConfig(
        fingers=fingers,
        tendons=tendons,
        actuator=ActuatorParams(
            max_torque=_num(act["max_torque_Nm"], "actuator.max_torque_Nm"),
            pulley_radius=_num(act["pulley_radius_mm"], "actuator.pulley_radius_mm"),
        ),
        palm_width=_num(palm["width_mm"], "palm.width_mm"),
        palm_length=_num(palm["length_mm"], "palm.length_mm"),
        overall_length_rest=_num(rest["overall_length_mm"], "rest_dimensions.overall_length_mm"),
        rest_span=_num(rest["span_mm"], "rest_dimensions.span_mm"),
        friction_coefficient=_num(
            data.get("friction_coefficient", default["friction_coefficient"]),
            "friction_coefficient",
        ),
    )
    config.validate()
    return config


def parse_hand_spec(text: str) -> HandConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise HandSpecParseError("", f"malformed hand spec: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise HandSpecParseError("", "hand spec must be a mapping at the top level")
    return config_from_dict(data)


def load_hand_spec(path: str | Path) -> HandConfig:
    """Read a YAML hand-spec file; see docs/hand-spec.md for the schema."""
    return parse_hand_spec(Path(path).read_text(encoding="utf-8"))


def dump_hand_spec(config: HandConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)


def save_hand_spec(config: HandConfig, path: str | Path) -> None:
    Path(path).write_text(dump_hand_spec(config), encoding="utf-8")
