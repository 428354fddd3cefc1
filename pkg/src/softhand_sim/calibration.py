"""Fit pulley radius and transmission efficiency to two measured forces.

The holding force on the trapezoid block and the single-finger press force
both scale with tendon tension, but with different sensitivity to the
efficiency (the press goes through one finger, the block is held by all of
them). For each pulley radius there is one efficiency that reproduces the
holding-force target; along that curve the press force grows monotonically
with the radius, so a nested root search lands on the single shared pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

from scipy.optimize import brentq

from .grasp_engine import DEFAULT_STEP, close_hand, single_finger_press
from .hand_model import HandConfig
from .objects import trapezoid

TARGET_HOLDING_FORCE = 19.8  # N
TARGET_FINGER_FORCE = 5.5  # N
PRESS_FINGER = "little"

EFFICIENCY_RANGE = (0.05, 1.0)
RADIUS_RANGE = (2.0, 400.0)

CurveRow = Tuple[float, float, float, float]  # pulley_mm, efficiency, holding_N (on target), press_N


class CalibrationError(RuntimeError):
    def __init__(self, message: str, curve: List[CurveRow]):
        super().__init__(message)
        self.curve = curve


@dataclass(frozen=True)
class CalibrationResult:
    config: HandConfig
    pulley_radius: float
    efficiency: float
    holding_force: float
    finger_force: float
    target_holding: float
    target_finger: float
    curve: List[CurveRow] = field(default_factory=list, compare=False)

    @property
    def holding_residual(self) -> float:
        return (self.holding_force - self.target_holding) / self.target_holding

    @property
    def finger_residual(self) -> float:
        return (self.finger_force - self.target_finger) / self.target_finger


def tuned(config: HandConfig, pulley_radius: float, efficiency: float) -> HandConfig:
    return config.with_actuator(pulley_radius=pulley_radius).with_efficiency(efficiency)


def holding_force(config: HandConfig, step: float = DEFAULT_STEP) -> float:
    report, _ = close_hand(config, trapezoid(), step=step)
    return report.holding_force


def calibrate(
    config: HandConfig,
    target_holding: float = TARGET_HOLDING_FORCE,
    target_finger: float = TARGET_FINGER_FORCE,
    finger: str = PRESS_FINGER,
    step: float = DEFAULT_STEP,
    xtol: float = 1e-3,
) -> CalibrationResult:
    """Find (pulley_radius, efficiency) matching both force targets at max torque."""
    if not (target_holding > 0 and target_finger > 0):
        raise ValueError("calibration targets must be > 0")
    config.finger(finger)
    curve: List[CurveRow] = []
    gaps: dict = {}

    def efficiency_for(radius: float) -> float | None:
        def f(eta: float) -> float:
            return holding_force(tuned(config, radius, eta), step) - target_holding

        lo, hi = EFFICIENCY_RANGE
        f_hi = f(hi)
        if f_hi < 0:
            return None  # even a lossless transmission is too weak
        if f(lo) > 0:
            return lo if math.isclose(f(lo), 0.0, abs_tol=1e-9) else None
        return brentq(f, lo, hi, xtol=xtol * 0.2)

    def press_gap(radius: float) -> float:
        if radius in gaps:
            return gaps[radius]
        eta = efficiency_for(radius)
        if eta is None:
            curve.append((radius, math.nan, math.nan, math.nan))
            gaps[radius] = math.nan
            return math.nan
        cfg = tuned(config, radius, eta)
        press = single_finger_press(cfg, finger, step=step)
        curve.append((radius, eta, target_holding, press))
        gaps[radius] = press - target_finger
        return gaps[radius]

    # expand geometrically from the configured radius until the press gap changes sign
    r0 = min(max(config.actuator.pulley_radius, RADIUS_RANGE[0]), RADIUS_RANGE[1])
    bracket = None
    g0 = press_gap(r0)
    if not math.isnan(g0):
        direction = 1.5 if g0 < 0 else 1 / 1.5
        r_prev, g_prev = r0, g0
        r = r0 * direction
        while RADIUS_RANGE[0] <= r <= RADIUS_RANGE[1]:
            g = press_gap(r)
            if math.isnan(g):
                break
            if g == 0 or (g > 0) != (g_prev > 0):
                bracket = (min(r, r_prev), max(r, r_prev))
                break
            r_prev, g_prev = r, g
            r *= direction
    if bracket is None:
        curve.sort()
        raise CalibrationError(
            f"could not bracket targets holding={target_holding} N, finger={target_finger} N", curve
        )
    radius = brentq(press_gap, *bracket, xtol=xtol * 20)
    eta = efficiency_for(radius)
    assert eta is not None
    cfg = tuned(config, radius, eta)
    curve.sort()
    return CalibrationResult(
        config=cfg,
        pulley_radius=radius,
        efficiency=eta,
        holding_force=holding_force(cfg, step),
        finger_force=single_finger_press(cfg, finger, step=step),
        target_holding=target_holding,
        target_finger=target_finger,
        curve=curve,
    )
