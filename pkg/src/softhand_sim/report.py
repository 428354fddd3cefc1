"""CSV and SVG renderings of closure traces, grasp reports and bench tables."""

from __future__ import annotations

import csv
import io
from typing import Optional, Sequence

import numpy as np

from .geometry import Box, Capsule, Sphere
from .grasp_engine import BenchRow, ClosureTrace, GraspObject, GraspReport
from .hand_model import JOINT_IDS, HandConfig
from .kinematics import FingerPose, HandState, hand_fk
from .svg import FINGER_COLORS, Canvas, Panel, bar_chart, padded_range, two_views


def _num(v: float) -> str:
    return f"{v:.6f}"


def trace_csv(config: HandConfig, trace: ClosureTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    angle_cols = [f"{f.name}_{j}_deg" for f in config.fingers for j in JOINT_IDS]
    w.writerow(["record", "displacement_mm", *angle_cols,
                *(f"tension_{t.tendon_id}_N" for t in config.tendons), "new_contacts"])
    for i, rec in enumerate(trace.records):
        new = ";".join(f"{c.finger}:{c.phalanx}" for c in rec.new_contacts)
        w.writerow([i, _num(rec.displacement), *(_num(v) for v in np.degrees(rec.state.angles).ravel()),
                    *(_num(v) for v in rec.state.tensions), new])
    return buf.getvalue()


def contacts_csv(report: GraspReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["finger", "phalanx", "x_mm", "y_mm", "z_mm", "nx", "ny", "nz", "normal_force_N", "displacement_mm"])
    for c in report.contacts:
        w.writerow([c.finger, c.phalanx, *(_num(v) for v in c.point), *(_num(v) for v in c.normal),
                    _num(c.normal_force), _num(c.displacement)])
    return buf.getvalue()


def report_summary(report: GraspReport) -> str:
    lines = [
        f"object: {report.object_name}",
        f"fingers_in_contact: {report.fingers_in_contact}",
        f"holding_force_N: {report.holding_force:.3f}",
        f"success: {str(report.success).lower()}",
        f"termination: {report.termination}",
        f"actuator_displacement_mm: {report.final_state.actuator_displacement:.3f}",
    ]
    if report.blocked_joints:
        lines.append("blocked: " + ", ".join(f"{f}.{j}" for f, j in sorted(report.blocked_joints)))
    return "\n".join(lines) + "\n"


def _outline(prim, n: int = 24) -> np.ndarray:
    """A few surface points to sketch a primitive in both views."""
    t = np.linspace(0.0, 2 * np.pi, n)
    ring = np.column_stack([np.cos(t), np.sin(t), np.zeros(n)])
    if isinstance(prim, Sphere):
        c = np.asarray(prim.center)
        return np.vstack([c + prim.radius * ring, c + prim.radius * ring[:, [0, 2, 1]], c + prim.radius * ring[:, [2, 0, 1]]])
    if isinstance(prim, Capsule):
        p0, p1 = np.asarray(prim.p0), np.asarray(prim.p1)
        pts = [p + prim.radius * r for p in (p0, p1) for r in (ring, ring[:, [0, 2, 1]], ring[:, [2, 0, 1]])]
        return np.vstack(pts)
    if isinstance(prim, Box):
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
        corners = signs * np.asarray(prim.half_extents)
        return np.asarray(prim.center) + corners @ prim.matrix.T
    raise TypeError(f"unknown primitive {prim!r}")


def pose_svg(config: HandConfig, state: HandState, obj: Optional[GraspObject] = None, title: str = "") -> str:
    poses = hand_fk(config, state)
    layers = []
    if obj is not None:
        for prim in obj.primitives:
            layers.append((_outline(prim), "#999999", "points"))
    for name, pose in poses.items():
        chain = np.vstack([pose.root, pose.joint_positions])
        layers.append((chain, FINGER_COLORS.get(name, "#555555"), "cap"))
    return two_views(layers, (config.palm_width, config.palm_length), title).render()


def finger_side_svg(pose: FingerPose) -> str:
    """Flexion-plane view of one finger in its root frame (x along the finger, y flexion)."""
    chain = np.vstack([pose.root, pose.joint_positions])[:, :2]
    ur, vr = padded_range(chain[:, 0], pose.radius + 10), padded_range(chain[:, 1], pose.radius + 10)
    canvas = Canvas(ur[1] - ur[0] + 40, vr[1] - vr[0] + 50)
    panel = Panel(canvas, (20.0, 30.0), ur, vr, f"{pose.name} finger, root frame (x along, y flexion)")
    color = FINGER_COLORS.get(pose.name, "#555555")
    panel.polyline([tuple(p) for p in chain], color, width=2 * pose.radius, opacity=0.35)
    panel.polyline([tuple(p) for p in chain], color, width=1.5)
    for u, v in chain:
        panel.circle(float(u), float(v), 2.0, "#000000")
    return canvas.render()


BENCH_HEADER = ("object", "mean_contacts", "successes", "trials", "holding_force_N")


def bench_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in rows:
        w.writerow([r.object, f"{r.mean_contacts:.3f}", r.successes, r.trials, f"{r.holding_force_N:.3f}"])
    return buf.getvalue()


def bench_svg(rows: Sequence[BenchRow]) -> str:
    y_max = max(5.0, max(r.trials for r in rows))
    return bar_chart(
        [r.object for r in rows],
        [("mean finger contacts", [r.mean_contacts for r in rows], "#1f77b4"),
         ("successful grasps", [float(r.successes) for r in rows], "#ff7f0e")],
        y_max,
        title="contacts and successes per object",
    )
