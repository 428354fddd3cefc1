"""Monte Carlo fingertip workspaces and the layout statistics built on them.

Each sample draws one MCP angle per finger uniformly over its range, derives
PIP/DIP through the coupling law (clamped at their limits) and records the
fingertip. Because a finger has a single actuated coordinate, each cloud is a
sampled curve; overlap measures therefore dilate the curves by a tolerance.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .hand_model import HandConfig
from .kinematics import fingertips, joint_ratios, mount_rotation
from .svg import FINGER_COLORS, two_views

OVERLAP_TOLERANCE = 12.0  # mm, dilation radius of each fingertip curve
OVERLAP_VOXEL = 2.0  # mm


@dataclass(frozen=True)
class WorkspaceCloud:
    fingers: Tuple[str, ...]
    points: Dict[str, np.ndarray]  # (n, 3) mm, hand frame
    angles: Dict[str, np.ndarray]  # (n, 3) rad
    clamped: Dict[str, np.ndarray]  # (n, 3) bool: joint held at its limit
    theta1_range: Dict[str, Tuple[float, float]]  # rad
    roots: Dict[str, np.ndarray]  # (3,)
    flex_dirs: Dict[str, np.ndarray]  # (3,) flexion direction of each root frame
    n: int
    seed: int | None
    palm: Tuple[float, float] = (90.0, 91.0)


def _assemble(config: HandConfig, theta1: np.ndarray, seed: int | None) -> WorkspaceCloud:
    points, angles, clamped, ranges, roots, flex = {}, {}, {}, {}, {}, {}
    for i, f in enumerate(config.fingers):
        limits = np.array(f.limits_rad)
        raw = theta1[:, i:i + 1] * joint_ratios(f)
        ang = np.minimum(raw, limits)
        angles[f.name] = ang
        clamped[f.name] = raw > limits
        points[f.name] = fingertips(f, ang)
        ranges[f.name] = (0.0, float(limits[0]))
        roots[f.name] = np.asarray(f.mount_position, dtype=float)
        flex[f.name] = mount_rotation(f)[:, 1]
    return WorkspaceCloud(
        fingers=config.finger_names,
        points=points,
        angles=angles,
        clamped=clamped,
        theta1_range=ranges,
        roots=roots,
        flex_dirs=flex,
        n=len(theta1),
        seed=seed,
        palm=(config.palm_width, config.palm_length),
    )


def sample_workspace(config: HandConfig, n: int, seed: int) -> WorkspaceCloud:
    """``n`` random closure postures per finger; row ``i`` of the draw is sample ``i``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    limits = np.array([f.limits_rad[0] for f in config.fingers])
    theta1 = rng.uniform(0.0, 1.0, size=(n, len(limits))) * limits
    return _assemble(config, theta1, seed)


def rest_cloud(config: HandConfig) -> WorkspaceCloud:
    return _assemble(config, np.zeros((1, len(config.fingers))), None)


def sweep_workspace(config: HandConfig, n: int) -> WorkspaceCloud:
    """Deterministic evenly spaced MCP sweep (the envelope oracle for sampling)."""
    limits = np.array([f.limits_rad[0] for f in config.fingers])
    return _assemble(config, np.linspace(0.0, 1.0, n)[:, None] * limits, None)


@dataclass(frozen=True)
class FingerStats:
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    centroid: np.ndarray
    flexion_depth: float  # extent along the finger's flexion direction
    max_reach: float  # farthest fingertip distance from the finger root

    @property
    def bbox_volume(self) -> float:
        return float(np.prod(self.bbox_max - self.bbox_min))


@dataclass(frozen=True)
class WorkspaceStats:
    fingers: Dict[str, FingerStats]
    opposition_distance: Dict[str, float]  # min thumb-to-finger fingertip distance
    overlap_volume: float  # mm^3 reachable within tolerance by the thumb and another finger
    thumb_little_centroid_distance: float


def overlap_volume(cloud: WorkspaceCloud, tolerance: float = OVERLAP_TOLERANCE,
                   voxel: float = OVERLAP_VOXEL) -> float:
    """Volume of space within ``tolerance`` of the thumb curve and of any other finger's curve."""
    if "thumb" not in cloud.points:
        return 0.0
    thumb = cloud.points["thumb"]
    others = [cloud.points[f] for f in cloud.fingers if f != "thumb"]
    if not others:
        return 0.0
    rest = np.vstack(others)
    lo = np.maximum(thumb.min(0), rest.min(0)) - tolerance
    hi = np.minimum(thumb.max(0), rest.max(0)) + tolerance
    if np.any(hi < lo):
        return 0.0
    axes = [np.arange(a, b + voxel, voxel) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    near_thumb = cKDTree(thumb).query(grid, distance_upper_bound=tolerance)[0] < tolerance
    cand = grid[near_thumb]
    near_other = cKDTree(rest).query(cand, distance_upper_bound=tolerance)[0] < tolerance
    return float(near_other.sum() * voxel**3)


def workspace_stats(cloud: WorkspaceCloud, tolerance: float = OVERLAP_TOLERANCE) -> WorkspaceStats:
    if cloud.n < 1 or not cloud.points:
        raise ValueError("workspace cloud is empty")
    per = {}
    for name in cloud.fingers:
        pts = cloud.points[name]
        rel = pts - cloud.roots[name]
        depth = rel @ cloud.flex_dirs[name]
        per[name] = FingerStats(
            bbox_min=pts.min(0),
            bbox_max=pts.max(0),
            centroid=pts.mean(0),
            flexion_depth=float(depth.max() - depth.min()),
            max_reach=float(np.linalg.norm(rel, axis=1).max()),
        )
    opposition = {}
    if "thumb" in cloud.points:
        tree = cKDTree(cloud.points["thumb"])
        for name in cloud.fingers:
            if name != "thumb":
                opposition[name] = float(tree.query(cloud.points[name])[0].min())
    span = (float(np.linalg.norm(per["thumb"].centroid - per["little"].centroid))
            if "thumb" in per and "little" in per else float("nan"))
    return WorkspaceStats(per, opposition, overlap_volume(cloud, tolerance), span)


def zero_splay(config: HandConfig) -> HandConfig:
    """The same hand with every non-thumb finger pointing straight along +y."""
    fingers = tuple(f if f.name == "thumb" else replace(f, mount_yaw_deg=0.0) for f in config.fingers)
    return replace(config, fingers=fingers)


CSV_HEADER = ("finger", "sample_id", "theta1_deg", "theta2_deg", "theta3_deg", "x_mm", "y_mm", "z_mm")


def cloud_csv(cloud: WorkspaceCloud) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    deg = {name: np.degrees(cloud.angles[name]) for name in cloud.fingers}
    for i in range(cloud.n):
        for name in cloud.fingers:
            a, p = deg[name][i], cloud.points[name][i]
            w.writerow([name, i, *(f"{v:.6f}" for v in a), *(f"{v:.6f}" for v in p)])
    return buf.getvalue()


def cloud_svg(cloud: WorkspaceCloud, max_points: int = 2000) -> str:
    layers = []
    for name in cloud.fingers:
        pts = cloud.points[name]
        if len(pts) > max_points:
            pts = pts[:max_points]
        layers.append((pts, FINGER_COLORS.get(name, "#555555"), "points"))
        layers.append((cloud.roots[name][None, :], "#000000", "points"))
    title = f"fingertip workspace, n={cloud.n}" + ("" if cloud.seed is None else f", seed={cloud.seed}")
    return two_views(layers, cloud.palm, title).render()


def stats_table(stats: WorkspaceStats) -> str:
    lines = ["finger,centroid_x_mm,centroid_y_mm,centroid_z_mm,bbox_dx_mm,bbox_dy_mm,bbox_dz_mm,"
             "flexion_depth_mm,max_reach_mm,thumb_distance_mm"]
    for name, s in stats.fingers.items():
        ext = s.bbox_max - s.bbox_min
        opp = stats.opposition_distance.get(name)
        lines.append(",".join([name, *(f"{v:.3f}" for v in s.centroid), *(f"{v:.3f}" for v in ext),
                               f"{s.flexion_depth:.3f}", f"{s.max_reach:.3f}",
                               "" if opp is None else f"{opp:.3f}"]))
    return "\n".join(lines) + "\n"
