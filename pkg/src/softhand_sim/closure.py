"""Quasi-static tendon equilibrium used by the closure engine.

Each finger moves along a single progress coordinate ``s`` (the MCP angle of
the free coupling trajectory): joint ``j`` sits at ``r_j * min(s, cap_j)`` where
``r_j`` is the coupling ratio and ``cap_j`` the progress at which the joint hit
its limit or was blocked by contact. Progress advances while the tendon
tension exceeds the elastic-band demand

    D(s) = sum_A r_j (k_j (r_j s - rest_j) + preload_j) / sum_A eta_j a_j r_j

over the still-active joints ``A``, and never goes backwards (bearing
friction holds it). ``D`` is affine between caps, so progress as a function
of tension is piecewise linear and each tendon's balance

    T = k_s (x - e(T)) + pretension

is solved exactly from precomputed breakpoints.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .hand_model import HandConfig
from .kinematics import joint_ratios
from .tendon_drive import route_efficiencies, route_joints


@dataclass
class FingerDrive:
    """Mutable progress state of one finger plus its piecewise demand curve."""

    index: int
    tendon: int
    ratios: np.ndarray  # (3,)
    arms: np.ndarray  # (3,)
    eff_arms: np.ndarray  # (3,) efficiency-weighted arms
    stiffness: np.ndarray  # (3,)
    rest: np.ndarray  # (3,)
    preload: np.ndarray  # (3,)
    limit_caps: np.ndarray  # (3,) progress at which each joint reaches its limit
    caps: np.ndarray = field(init=False)
    contact_blocked: np.ndarray = field(init=False)
    s: float = 0.0
    knots_t: List[float] = field(default_factory=list)
    knots_s: List[float] = field(default_factory=list)
    knots_e: List[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.caps = self.limit_caps.copy()
        self.contact_blocked = np.zeros(3, dtype=bool)

    # -- geometry of the progress coordinate
    def angles_at(self, s: float) -> np.ndarray:
        return self.ratios * np.minimum(s, self.caps)

    def excursion_at(self, s: float) -> float:
        return float(self.arms @ self.angles_at(s))

    @property
    def final_s(self) -> float:
        return float(self.caps.max())

    @property
    def fully_blocked(self) -> bool:
        return self.s >= self.final_s

    def moving_joints(self) -> np.ndarray:
        return self.s < self.caps

    def block_proximal(self, phalanx: int) -> None:
        """Freeze every joint proximal to ``phalanx`` at the current progress."""
        for j in range(phalanx):
            if self.s < self.caps[j]:
                self.caps[j] = self.s
                self.contact_blocked[j] = True
        self.rebuild()

    # -- demand curve
    def _segment(self, start: float) -> Tuple[float, float, float]:
        """(alpha, beta, end) of the affine demand on the segment beginning at ``start``."""
        active = self.caps > start
        weight = float(self.eff_arms[active] @ self.ratios[active])
        r = self.ratios[active]
        beta = float(self.stiffness[active] @ (r * r)) / weight
        alpha = float(r @ (self.preload[active] - self.stiffness[active] * self.rest[active])) / weight
        end = float(self.caps[active].min())
        return alpha, beta, end

    def rebuild(self) -> None:
        """Tabulate progress (and excursion) against tension from the current ``s``."""
        ts: List[float] = []
        ss: List[float] = []
        cur = self.s
        while cur < self.final_s:
            alpha, beta, end = self._segment(cur)
            d_start = alpha + beta * cur
            if not ts:
                ts.append(d_start)
                ss.append(cur)
            elif d_start > ts[-1]:
                ts.append(d_start)
                ss.append(cur)
            elif d_start < ts[-1]:
                # demand dropped: the finger snaps forward at the current tension
                t_now = ts[-1]
                jump = end if beta <= 0 else min(end, (t_now - alpha) / beta)
                ts.append(t_now)
                ss.append(jump)
                if jump >= end:
                    cur = end
                    continue
            ts.append(alpha + beta * end)
            ss.append(end)
            cur = end
        if not ts:
            ts, ss = [0.0], [self.s]
        self.knots_t = ts
        self.knots_s = ss
        self.knots_e = [self.excursion_at(s) for s in ss]

    def progress_at(self, tension: float, side: str = "right") -> float:
        """Progress reached under ``tension``; ``side`` picks the end of a jump."""
        ts, ss = self.knots_t, self.knots_s
        if side == "left":
            i = bisect.bisect_left(ts, tension)
            if i == 0:
                return ss[0]
            if i < len(ts) and ts[i] == tension:
                return ss[i]
        else:
            i = bisect.bisect_right(ts, tension)
            if i == 0:
                return ss[0]
            if ts[i - 1] == tension:
                return ss[i - 1]
        if i == len(ts):
            return ss[-1]
        t0, t1 = ts[i - 1], ts[i]
        s0, s1 = ss[i - 1], ss[i]
        return s0 + (s1 - s0) * (tension - t0) / (t1 - t0)

    def progress_for_excursion(self, excursion: float, lo: float, hi: float) -> float:
        """Invert the excursion on [lo, hi] (used inside a snap)."""
        e_lo, e_hi = self.excursion_at(lo), self.excursion_at(hi)
        if e_hi <= e_lo:
            return hi
        # excursion is linear in s between caps
        grid = sorted({lo, hi, *[c for c in self.caps if lo < c < hi]})
        es = [self.excursion_at(s) for s in grid]
        for (s0, s1), (a, b) in zip(zip(grid[:-1], grid[1:]), zip(es[:-1], es[1:])):
            if excursion <= b or s1 == hi:
                if b <= a:
                    return s1
                return s0 + (s1 - s0) * min(max((excursion - a) / (b - a), 0.0), 1.0)
        return hi


def build_drives(config: HandConfig) -> List[FingerDrive]:
    drives: List[FingerDrive] = [None] * len(config.fingers)  # type: ignore[list-item]
    for ti, route in enumerate(config.tendons):
        joints = route_joints(route, config)
        effs = route_efficiencies(route, config)
        per_finger: dict = {}
        for (fi, ji, jp), eff in zip(joints, effs):
            per_finger.setdefault(fi, {})[ji] = (jp, eff)
        for fi, entries in per_finger.items():
            finger = config.fingers[fi]
            if len(entries) != 3:
                raise ValueError(
                    f"finger {finger.name}: all three joints must ride on one tendon for closure"
                )
            ratios = joint_ratios(finger)
            jps = [entries[j][0] for j in range(3)]
            effs_f = np.array([entries[j][1] for j in range(3)])
            arms = np.array([jp.moment_arm_m for jp in jps])
            limits = np.array([jp.limit_angle for jp in jps])
            drive = FingerDrive(
                index=fi,
                tendon=ti,
                ratios=ratios,
                arms=arms,
                eff_arms=arms * effs_f,
                stiffness=np.array([jp.restoring_stiffness for jp in jps]),
                rest=np.array([jp.rest_angle for jp in jps]),
                preload=np.array([jp.restoring_preload for jp in jps]),
                limit_caps=limits / ratios,
            )
            drive.rebuild()
            drives[fi] = drive
    return drives


@dataclass
class TendonSolution:
    tension: float
    progress: List[float]  # per finger on the tendon, same order as TendonBalance.fingers


class TendonBalance:
    """Exact solution of one tendon's series-spring balance against its fingers."""

    def __init__(self, stiffness: float, pretension: float, fingers: Sequence[FingerDrive]):
        self.k = stiffness
        self.p = pretension
        self.fingers = list(fingers)
        self.rebuild()

    def rebuild(self) -> None:
        ts = sorted({t for f in self.fingers for t in f.knots_t})
        self.ts = ts
        self.h_left = [t + self.k * self._excursion(t, "left") for t in ts]
        self.h_right = [t + self.k * self._excursion(t, "right") for t in ts]

    def _excursion(self, tension: float, side: str) -> float:
        return sum(f.excursion_at(f.progress_at(tension, side)) for f in self.fingers)

    def solve(self, displacement: float) -> TendonSolution:
        y = self.k * displacement + self.p
        ts, hl, hr = self.ts, self.h_left, self.h_right
        if not self.fingers:
            return TendonSolution(max(0.0, y), [])
        if y < hl[0]:
            e0 = sum(f.knots_e[0] for f in self.fingers)
            tension = max(0.0, y - self.k * e0)
            return TendonSolution(tension, [f.progress_at(tension, "left") for f in self.fingers])
        i = bisect.bisect_right(hl, y) - 1
        if y <= hr[i]:
            return self._inside_jump(ts[i], y)
        if i + 1 < len(ts):
            t0, t1 = ts[i], ts[i + 1]
            tension = t0 + (t1 - t0) * (y - hr[i]) / (hl[i + 1] - hr[i])
        else:
            e_end = sum(f.knots_e[-1] for f in self.fingers)
            tension = y - self.k * e_end
        tension = max(tension, 0.0)
        return TendonSolution(tension, [f.progress_at(tension, "right") for f in self.fingers])

    def _inside_jump(self, tension: float, y: float) -> TendonSolution:
        lows = [f.progress_at(tension, "left") for f in self.fingers]
        highs = [f.progress_at(tension, "right") for f in self.fingers]
        e_low = [f.excursion_at(s) for f, s in zip(self.fingers, lows)]
        e_high = [f.excursion_at(s) for f, s in zip(self.fingers, highs)]
        span = sum(e_high) - sum(e_low)
        needed = (y - tension) / self.k - sum(e_low)
        frac = 0.0 if span <= 0 else min(max(needed / span, 0.0), 1.0)
        progress = [
            f.progress_for_excursion(el + frac * (eh - el), lo, hi) if hi > lo else lo
            for f, lo, hi, el, eh in zip(self.fingers, lows, highs, e_low, e_high)
        ]
        return TendonSolution(max(tension, 0.0), progress)
