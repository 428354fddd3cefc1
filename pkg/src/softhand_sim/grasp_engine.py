"""Quasi-static adaptive-synergy closure around rigid objects.

The actuator displacement is advanced in steps. Every step solves the three
tendon balances (see :mod:`softhand_sim.closure`), poses the fingers and checks
the moving phalanges for new penetrations. A new penetration is bisected down
to the touch instant; the touching phalanx then freezes the joints proximal to
it while distal joints keep flexing. Once every joint is blocked or at its
limit, the series springs take up the rest of the stroke until the actuator
force budget is spent.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .closure import FingerDrive, TendonBalance, build_drives
from .geometry import Box, Primitive
from .hand_model import JOINT_IDS, HandConfig
from .kinematics import FingerPose, HandState, hand_fk, mount_rotation

GRAVITY = 9.81e-3  # N per gram
DEFAULT_STEP = 0.05  # mm
BISECTION_TOL = 1e-3  # mm
DEFAULT_MAX_DISPLACEMENT = 1000.0  # mm
LIFT_SAFETY = 1.5
MIN_LEVER = 1.0  # mm
PALM_NORMAL = np.array([0.0, 0.0, 1.0])


class ClosureError(RuntimeError):
    def __init__(self, message: str, trace: "ClosureTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class GraspObject:
    name: str
    primitives: Tuple[Primitive, ...]
    mass: Optional[float] = None  # g
    category: str = ""

    def __post_init__(self) -> None:
        if not self.primitives:
            raise ValueError(f"object {self.name!r} needs at least one primitive")
        for p in self.primitives:
            sizes = [p.radius] if hasattr(p, "radius") else list(p.half_extents)
            if min(sizes) <= 0:
                raise ValueError(f"object {self.name!r}: primitive sizes must be > 0")

    @property
    def weight(self) -> float:
        return 0.0 if self.mass is None else self.mass * GRAVITY

    def translated(self, offset: Sequence[float]) -> "GraspObject":
        off = np.asarray(offset, dtype=float)
        return replace(self, primitives=tuple(p.translated(off) for p in self.primitives))

    def rotated_z(self, angle_rad: float, pivot: Sequence[float]) -> "GraspObject":
        piv = np.asarray(pivot, dtype=float)
        return replace(self, primitives=tuple(p.rotated_z(angle_rad, piv) for p in self.primitives))

    def centroid(self) -> np.ndarray:
        return np.mean([p.bounds()[0] for p in self.primitives], axis=0)


@dataclass
class Contact:
    finger: str
    phalanx: int  # 0 base .. 3 fingertip
    point: np.ndarray  # on the object surface
    normal: np.ndarray  # unit, object -> phalanx
    penetration: float
    normal_force: float = 0.0
    primitive: int = 0
    displacement: float = 0.0


@dataclass
class ClosureRecord:
    displacement: float
    state: HandState
    new_contacts: Tuple[Contact, ...] = ()


@dataclass
class ClosureTrace:
    records: List[ClosureRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def displacements(self) -> np.ndarray:
        return np.array([r.displacement for r in self.records])

    @property
    def angles(self) -> np.ndarray:
        """(n_records, n_fingers, 3) joint angles."""
        return np.stack([r.state.angles for r in self.records])

    @property
    def tensions(self) -> np.ndarray:
        return np.stack([r.state.tensions for r in self.records])


@dataclass
class GraspReport:
    contacts: List[Contact]
    fingers_in_contact: int
    blocked_joints: FrozenSet[Tuple[str, str]]
    final_state: HandState
    holding_force: float
    success: bool
    object_name: str = "none"
    termination: str = ""

    def contacts_of(self, finger: str) -> List[Contact]:
        return [c for c in self.contacts if c.finger == finger]

    def last_contact_displacement(self, finger: str) -> float:
        return max((c.displacement for c in self.contacts_of(finger)), default=math.nan)


# --------------------------------------------------------------------------- contacts

def _segments_and_radii(poses: Dict[str, FingerPose]) -> Tuple[np.ndarray, np.ndarray, List[Tuple[str, int]]]:
    a, b, radii, labels = [], [], [], []
    for name, pose in poses.items():
        seg = pose.phalanx_segments
        for k in range(4):
            a.append(seg[k, 0])
            b.append(seg[k, 1])
            radii.append(pose.radius)
            labels.append((name, k))
    return np.array(a), np.array(b), np.array(radii), labels


def _penetrations(a: np.ndarray, b: np.ndarray, radii: np.ndarray, obj: GraspObject):
    """Yield (segment index, primitive index, penetration, seg point, surf point, normal)."""
    for pi, prim in enumerate(obj.primitives):
        center, bound = prim.bounds()
        # broad phase: segment-to-bounding-sphere distance
        d = b - a
        t = np.clip(np.einsum("ij,ij->i", center - a, d) / np.maximum(np.einsum("ij,ij->i", d, d), 1e-12), 0, 1)
        far = np.linalg.norm(a + t[:, None] * d - center, axis=1) > bound + radii + 1e-9
        idx = np.flatnonzero(~far)
        if idx.size == 0:
            continue
        dist, seg_pt, surf_pt, normal = prim.query(a[idx], b[idx])
        pen = radii[idx] - dist
        for local, i in enumerate(idx):
            yield int(i), pi, float(pen[local]), seg_pt[local], surf_pt[local], normal[local]


def detect_contacts(poses: Dict[str, FingerPose], obj: GraspObject) -> List[Contact]:
    """Every phalanx-capsule / primitive overlap (penetration >= 0), deepest point each."""
    if not poses:
        return []
    a, b, radii, labels = _segments_and_radii(poses)
    contacts = []
    for i, pi, pen, _seg, surf, normal in _penetrations(a, b, radii, obj):
        if pen >= 0.0:
            finger, k = labels[i]
            contacts.append(Contact(finger, k, surf.copy(), normal.copy(), pen, primitive=pi))
    return contacts


# --------------------------------------------------------------------------- closure

class _Closure:
    def __init__(self, config: HandConfig, obj: Optional[GraspObject]):
        self.config = config
        self.obj = obj
        self.drives: List[FingerDrive] = build_drives(config)
        self.balances = [
            TendonBalance(route.spring_stiffness, route.pretension,
                          [d for d in self.drives if d.tendon == ti])
            for ti, route in enumerate(config.tendons)
        ]
        rots = [mount_rotation(f) for f in config.fingers]
        self.x_axes = np.array([r[:, 0] for r in rots])
        self.y_axes = np.array([r[:, 1] for r in rots])
        self.roots = np.array([f.mount_position for f in config.fingers], dtype=float)
        self.lengths = np.array([f.phalanx_lengths for f in config.fingers], dtype=float)
        self.radii = np.array([f.phalanx_radius for f in config.fingers], dtype=float)
        self.names = config.finger_names
        self.capacity = config.actuator.capacity
        self.contacts: List[Contact] = []

    # -- state evaluation (pure: does not touch drive.s)
    def solve(self, x: float) -> Tuple[np.ndarray, np.ndarray]:
        tensions = np.zeros(len(self.balances))
        progress = np.array([d.s for d in self.drives])
        for ti, bal in enumerate(self.balances):
            sol = bal.solve(x)
            tensions[ti] = sol.tension
            for drive, s in zip(bal.fingers, sol.progress):
                progress[drive.index] = max(s, drive.s)
        return tensions, progress

    def angles(self, progress: np.ndarray) -> np.ndarray:
        return np.array([d.angles_at(s) for d, s in zip(self.drives, progress)])

    def segments(self, angles: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Phalanx axis endpoints (n_fingers, 4) x 3 for the given joint angles."""
        phi = np.concatenate([np.zeros((len(angles), 1)), np.cumsum(angles, axis=1)], axis=1)
        px = np.cumsum(self.lengths * np.cos(phi), axis=1)
        py = np.cumsum(self.lengths * np.sin(phi), axis=1)
        pts = (self.roots[:, None, :] + px[..., None] * self.x_axes[:, None, :]
               + py[..., None] * self.y_axes[:, None, :])
        starts = np.concatenate([self.roots[:, None, :], pts[:, :-1]], axis=1)
        return starts, pts

    def new_penetrations(self, progress: np.ndarray) -> List[Contact]:
        if self.obj is None:
            return []
        rows = []
        for fi, d in enumerate(self.drives):
            if d.fully_blocked:
                continue
            moving = d.moving_joints()
            for k in range(1, 4):
                if moving[:k].any():
                    rows.append((fi, k))
        if not rows:
            return []
        starts, ends = self.segments(self.angles(progress))
        fi_arr = np.array([r[0] for r in rows])
        k_arr = np.array([r[1] for r in rows])
        a, b = starts[fi_arr, k_arr], ends[fi_arr, k_arr]
        found = []
        for i, pi, pen, _seg, surf, normal in _penetrations(a, b, self.radii[fi_arr], self.obj):
            if pen > 0.0:
                found.append(Contact(self.names[rows[i][0]], rows[i][1], surf.copy(), normal.copy(), pen, primitive=pi))
        return found

    def commit(self, x: float, progress: np.ndarray) -> None:
        for d, s in zip(self.drives, progress):
            d.s = float(s)

    def snapshot(self, x: float, tensions: np.ndarray) -> HandState:
        angles = self.angles(np.array([d.s for d in self.drives]))
        blocked = np.array([d.s >= d.caps for d in self.drives])
        return HandState(float(x), angles, blocked, tensions.copy())

    def apply_contacts(self, found: List[Contact], x: float) -> List[Contact]:
        touched: Dict[int, int] = {}
        for c in found:
            fi = self.names.index(c.finger)
            touched[fi] = max(touched.get(fi, 0), c.phalanx)
            c.displacement = x
        for fi, k in touched.items():
            self.drives[fi].block_proximal(k)
        for ti in {self.drives[fi].tendon for fi in touched}:
            self.balances[ti].rebuild()
        self.contacts.extend(found)
        return found

    def all_blocked(self) -> bool:
        return all(d.fully_blocked for d in self.drives)

    def budget_displacement(self, x_lo: float, x_hi: float) -> float:
        def excess(x: float) -> float:
            return float(self.solve(x)[0].sum()) - self.capacity

        return brentq(excess, x_lo, x_hi, xtol=1e-9, rtol=1e-12)


def close_hand(
    config: HandConfig,
    obj: Optional[GraspObject] = None,
    max_displacement: float = DEFAULT_MAX_DISPLACEMENT,
    step: float = DEFAULT_STEP,
    bisection_tol: float = BISECTION_TOL,
) -> Tuple[GraspReport, ClosureTrace]:
    """Close the hand quasi-statically around ``obj`` (or in free air)."""
    if not step > 0:
        raise ValueError("step must be > 0")
    sim = _Closure(config, obj)
    trace = ClosureTrace()

    x = 0.0
    tensions, progress = sim.solve(x)
    if tensions.sum() > sim.capacity:
        raise ClosureError("pretension alone exceeds the actuator force budget", trace)
    sim.commit(x, progress)
    start_contacts = sim.new_penetrations(progress)
    sim.apply_contacts(start_contacts, x)
    trace.records.append(ClosureRecord(x, sim.snapshot(x, tensions), tuple(start_contacts)))

    termination = "max_displacement"
    while x < max_displacement:
        if sim.all_blocked():
            # only the series springs can still stretch
            total_k = sum(r.spring_stiffness for r in config.tendons)
            excursions = [sum(d.excursion_at(d.s) for d in bal.fingers) for bal in sim.balances]
            x_hi = max(x, (sim.capacity + sum(r.spring_stiffness * e for r, e in zip(config.tendons, excursions))) / total_k) + 1.0
            if x_hi >= max_displacement and sim.solve(max_displacement)[0].sum() <= sim.capacity:
                x_end, termination = max_displacement, "max_displacement"
            else:
                x_end, termination = sim.budget_displacement(x, x_hi), "force_budget"
            if x_end > x:
                tensions, progress = sim.solve(x_end)
                sim.commit(x_end, progress)
                trace.records.append(ClosureRecord(x_end, sim.snapshot(x_end, tensions)))
                x = x_end
            break

        x_new = min(x + step, max_displacement)
        tensions, progress = sim.solve(x_new)
        budget_hit = tensions.sum() > sim.capacity
        if budget_hit:
            x_new = sim.budget_displacement(x, x_new)
            tensions, progress = sim.solve(x_new)

        found = sim.new_penetrations(progress)
        if found:
            lo, hi = x, x_new
            iterations = 0
            while hi - lo > bisection_tol:
                mid = 0.5 * (lo + hi)
                if sim.new_penetrations(sim.solve(mid)[1]):
                    hi = mid
                else:
                    lo = mid
                iterations += 1
                if iterations > 200:
                    raise ClosureError(f"touch bisection did not converge near x = {x_new:.6f} mm", trace)
            if hi < x_new:
                tensions, progress = sim.solve(hi)
                found = sim.new_penetrations(progress)
                budget_hit = False
            if not found:
                raise ClosureError(f"touch bisection lost the contact near x = {hi:.6f} mm", trace)
            x_new = hi
            sim.commit(x_new, progress)
            sim.apply_contacts(found, x_new)
        else:
            sim.commit(x_new, progress)
        x = x_new
        trace.records.append(ClosureRecord(x, sim.snapshot(x, tensions), tuple(found)))
        if budget_hit:
            termination = "force_budget"
            break

    final = trace.records[-1].state
    contacts = sim.contacts
    blocked = frozenset(
        (config.fingers[d.index].name, JOINT_IDS[j])
        for d in sim.drives for j in range(3) if d.contact_blocked[j]
    )
    report = GraspReport(
        contacts=contacts,
        fingers_in_contact=len({c.finger for c in contacts}),
        blocked_joints=blocked,
        final_state=final,
        holding_force=0.0,
        success=False,
        object_name=obj.name if obj is not None else "none",
        termination=termination,
    )
    if contacts:
        report.holding_force = estimate_holding_force(report, config)
    report.success = grasp_success(report, obj)
    return report, trace


# --------------------------------------------------------------------------- forces

def contact_normal_force(config: HandConfig, state: HandState, contact: Contact,
                         poses: Optional[Dict[str, FingerPose]] = None) -> Optional[float]:
    """Normal force the blocking joint's tendon torque exerts at ``contact``.

    Returns None when the lever arm is degenerate (< 1 mm) or the contact sits
    on the palm-fixed base phalanx.
    """
    if contact.phalanx == 0:
        return None
    if poses is None:
        poses = hand_fk(config, state)
    pose = poses[contact.finger]
    joint = contact.phalanx - 1
    ti = config.tendon_of(contact.finger, JOINT_IDS[joint])
    route = config.tendons[ti]
    fi = config.finger_index(contact.finger)
    efficiency = 1.0
    for finger, jid in route.served:
        efficiency *= config.fingers[config.finger_index(finger)].joint(jid).efficiency
        if (finger, jid) == (contact.finger, JOINT_IDS[joint]):
            break
    arm = config.fingers[fi].joints[joint].moment_arm_m
    pivot = pose.joint_positions[joint]
    rel = np.asarray(contact.point) - pivot
    lever = float(np.linalg.norm(rel - pose.axis * (rel @ pose.axis)))
    if lever < MIN_LEVER:
        return None
    return float(state.tensions[ti]) * arm * efficiency / lever


def estimate_holding_force(report: GraspReport, config: HandConfig) -> float:
    """Force (N) the grasp can hold along the palm normal, friction included.

    Fills in ``normal_force`` on every contact of the report.
    """
    state = report.final_state
    poses = hand_fk(config, state)
    mu = config.friction_coefficient
    net = 0.0
    friction = 0.0
    for contact in report.contacts:
        force = contact_normal_force(config, state, contact, poses)
        if force is None:
            if contact.phalanx > 0:
                warnings.warn(
                    f"contact on {contact.finger} phalanx {contact.phalanx} has a degenerate lever arm; excluded",
                    RuntimeWarning,
                    stacklevel=2,
                )
            contact.normal_force = 0.0
            continue
        contact.normal_force = force
        along = float(np.asarray(contact.normal) @ PALM_NORMAL)
        net += force * along
        friction += mu * force * math.sqrt(max(0.0, 1.0 - along * along))
    return abs(net) + friction


def has_opposition(contacts: Sequence[Contact]) -> bool:
    """True if two different fingers push with opposing normal components."""
    for i, ci in enumerate(contacts):
        for cj in contacts[i + 1:]:
            if ci.finger != cj.finger and float(np.dot(ci.normal, cj.normal)) < 0.0:
                return True
    return False


def grasp_success(report: GraspReport, obj: Optional[GraspObject]) -> bool:
    if obj is None or report.fingers_in_contact < 2:
        return False
    if not has_opposition(report.contacts):
        return False
    return report.holding_force >= LIFT_SAFETY * obj.weight


# --------------------------------------------------------------------------- press test

PRESS_PAD_HALF = (8.0, 8.0)  # mm, footprint of the sensor patch under the fingertip
PRESS_PAD_HEIGHT = 5.0  # mm


def press_pad(config: HandConfig, finger: str, height: float = PRESS_PAD_HEIGHT) -> GraspObject:
    """A flat sensor pad on the palm under the fingertip's fully flexed position."""
    f = config.finger(finger)
    limits = np.array(f.limits_rad)
    from .kinematics import finger_fk

    tip = finger_fk(f, limits).fingertip
    pad = Box((float(tip[0]), float(tip[1]), height / 2.0), (*PRESS_PAD_HALF, height / 2.0))
    return GraspObject(f"press_pad_{finger}", (pad,))


def single_finger_press(config: HandConfig, finger: str, step: float = DEFAULT_STEP) -> float:
    """Fingertip press force (N) on a pad under ``finger`` at force-budget exhaustion."""
    config.finger(finger)
    report, _ = close_hand(config, press_pad(config, finger), step=step)
    return float(sum(c.normal_force for c in report.contacts if c.finger == finger))


# --------------------------------------------------------------------------- bench

@dataclass(frozen=True)
class BenchRow:
    object: str
    mean_contacts: float
    successes: int
    trials: int
    holding_force_N: float


DEFAULT_JITTER = (4.0, 8.0)  # (mm, deg)


def _jitter_object(obj: GraspObject, rng: np.random.Generator, jitter: Tuple[float, float]) -> GraspObject:
    shift_mm, yaw_deg = jitter
    dx, dy = rng.uniform(-shift_mm, shift_mm, size=2) if shift_mm > 0 else (0.0, 0.0)
    yaw = math.radians(rng.uniform(-yaw_deg, yaw_deg)) if yaw_deg > 0 else 0.0
    pivot = obj.centroid()
    moved = obj.rotated_z(yaw, pivot) if yaw else obj
    return moved.translated((dx, dy, 0.0)) if (dx or dy) else moved


def bench_threads() -> int:
    env = os.environ.get("SOFTHAND_SIM_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def run_bench(
    config: HandConfig,
    corpus: Sequence[GraspObject],
    trials: int = 5,
    pose_jitter: Tuple[float, float] = DEFAULT_JITTER,
    seed: int = 0,
    step: float = DEFAULT_STEP,
    threads: Optional[int] = None,
) -> List[BenchRow]:
    """Top-down grasp trials per object with jittered in-palm pose."""
    if not corpus:
        raise ValueError("bench corpus is empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(len(corpus) * trials)
    jobs = []
    for oi, obj in enumerate(corpus):
        for t in range(trials):
            rng = np.random.default_rng(seeds[oi * trials + t])
            jobs.append(_jitter_object(obj, rng, pose_jitter))

    def run(o: GraspObject) -> GraspReport:
        return close_hand(config, o, step=step)[0]

    workers = threads or bench_threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, jobs))
    else:
        reports = [run(o) for o in jobs]

    rows = []
    for oi, obj in enumerate(corpus):
        chunk = reports[oi * trials:(oi + 1) * trials]
        rows.append(BenchRow(
            object=obj.name,
            mean_contacts=float(np.mean([r.fingers_in_contact for r in chunk])),
            successes=int(sum(r.success for r in chunk)),
            trials=trials,
            holding_force_N=float(np.mean([r.holding_force for r in chunk])),
        ))
    return rows


def overall_success_rate(rows: Sequence[BenchRow]) -> float:
    return sum(r.successes for r in rows) / sum(r.trials for r in rows)
