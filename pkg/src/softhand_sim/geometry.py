"""Narrow-phase distance queries between phalanx capsules and object primitives.

Every query takes a batch of segments ``a, b`` of shape (n, 3) and returns
``(distance, seg_point, surf_point, normal)`` where ``distance`` is the signed
distance from the segment axis to the primitive surface (negative once the axis
is inside), ``seg_point`` the deepest/closest point on the axis, ``surf_point``
the matching point on the primitive surface and ``normal`` the unit vector
pointing from the primitive toward the segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.spatial.transform import Rotation

Query = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

_EPS = 1e-12
_FALLBACK_NORMAL = np.array([0.0, 0.0, 1.0])


def _unit_rows(v: np.ndarray, fallback: np.ndarray = _FALLBACK_NORMAL) -> Tuple[np.ndarray, np.ndarray]:
    norm = np.linalg.norm(v, axis=-1)
    safe = norm > _EPS
    out = np.where(safe[:, None], v / np.where(safe, norm, 1.0)[:, None], fallback)
    return out, norm


def closest_t_point(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    t = np.einsum("ij,ij->i", p - a, d) / np.maximum(dd, _EPS)
    return np.clip(t, 0.0, 1.0)


def segment_segment(a: np.ndarray, b: np.ndarray, c: np.ndarray, e: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Closest-point parameters (s on a-b, t on c-e) for batches of segment pairs."""
    d1 = b - a
    d2 = e - c
    r = a - c
    aa = np.einsum("ij,ij->i", d1, d1)
    ee = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    cc = np.einsum("ij,ij->i", d1, r)
    bb = np.einsum("ij,ij->i", d1, d2)
    denom = aa * ee - bb * bb
    s = np.where(denom > _EPS * np.maximum(aa * ee, 1.0), np.clip((bb * f - cc * ee) / np.where(denom > 0, denom, 1.0), 0.0, 1.0), 0.0)
    t = (bb * s + f) / np.maximum(ee, _EPS)
    s = np.where(t < 0.0, np.clip(-cc / np.maximum(aa, _EPS), 0.0, 1.0), s)
    s = np.where(t > 1.0, np.clip((bb - cc) / np.maximum(aa, _EPS), 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)
    # second segment degenerates to a point
    point2 = ee <= _EPS
    s = np.where(point2, np.clip(-cc / np.maximum(aa, _EPS), 0.0, 1.0), s)
    t = np.where(point2, 0.0, t)
    return s, t


@dataclass(frozen=True)
class Sphere:
    center: Tuple[float, float, float]
    radius: float
    kind: str = field(default="sphere", init=False)

    def bounds(self) -> Tuple[np.ndarray, float]:
        return np.asarray(self.center, dtype=float), self.radius

    def query(self, a: np.ndarray, b: np.ndarray) -> Query:
        c = np.asarray(self.center, dtype=float)
        t = closest_t_point(a, b, c[None, :])
        seg = a + t[:, None] * (b - a)
        normal, dist = _unit_rows(seg - c)
        return dist - self.radius, seg, c + self.radius * normal, normal

    def translated(self, offset: np.ndarray) -> "Sphere":
        return Sphere(tuple(np.asarray(self.center) + offset), self.radius)

    def rotated_z(self, angle_rad: float, pivot: np.ndarray) -> "Sphere":
        return Sphere(tuple(_rot_z_about(np.asarray(self.center, float), angle_rad, pivot)), self.radius)

    def to_dict(self) -> dict:
        return {"type": "sphere", "center_mm": list(self.center), "radius_mm": self.radius}


@dataclass(frozen=True)
class Capsule:
    p0: Tuple[float, float, float]
    p1: Tuple[float, float, float]
    radius: float
    kind: str = field(default="capsule", init=False)

    def bounds(self) -> Tuple[np.ndarray, float]:
        p0 = np.asarray(self.p0, float)
        p1 = np.asarray(self.p1, float)
        return 0.5 * (p0 + p1), 0.5 * float(np.linalg.norm(p1 - p0)) + self.radius

    def query(self, a: np.ndarray, b: np.ndarray) -> Query:
        n = len(a)
        c = np.broadcast_to(np.asarray(self.p0, float), (n, 3))
        e = np.broadcast_to(np.asarray(self.p1, float), (n, 3))
        s, t = segment_segment(a, b, c, e)
        seg = a + s[:, None] * (b - a)
        axis_pt = c + t[:, None] * (e - c)
        normal, dist = _unit_rows(seg - axis_pt)
        return dist - self.radius, seg, axis_pt + self.radius * normal, normal

    def translated(self, offset: np.ndarray) -> "Capsule":
        return Capsule(tuple(np.asarray(self.p0) + offset), tuple(np.asarray(self.p1) + offset), self.radius)

    def rotated_z(self, angle_rad: float, pivot: np.ndarray) -> "Capsule":
        return Capsule(
            tuple(_rot_z_about(np.asarray(self.p0, float), angle_rad, pivot)),
            tuple(_rot_z_about(np.asarray(self.p1, float), angle_rad, pivot)),
            self.radius,
        )

    def to_dict(self) -> dict:
        return {"type": "capsule", "p0_mm": list(self.p0), "p1_mm": list(self.p1), "radius_mm": self.radius}


@dataclass(frozen=True)
class Box:
    """Oriented box; ``rotation_deg`` are extrinsic x-y-z Euler angles."""

    center: Tuple[float, float, float]
    half_extents: Tuple[float, float, float]
    rotation_deg: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind: str = field(default="box", init=False)

    @cached_property
    def matrix(self) -> np.ndarray:
        return Rotation.from_euler("xyz", self.rotation_deg, degrees=True).as_matrix()

    def bounds(self) -> Tuple[np.ndarray, float]:
        return np.asarray(self.center, float), float(np.linalg.norm(self.half_extents))

    def query(self, a: np.ndarray, b: np.ndarray) -> Query:
        rot = self.matrix
        c = np.asarray(self.center, float)
        h = np.asarray(self.half_extents, float)
        la = (a - c) @ rot
        lb = (b - c) @ rot
        dist, t = _segment_aabb(la, lb, h)
        inside = dist <= 0.0
        for i in np.flatnonzero(inside):
            dist[i], t[i] = _deepest_inside(la[i], lb[i], h)
        p = la + t[:, None] * (lb - la)
        q = np.clip(p, -h, h)
        normal_l, _ = _unit_rows(p - q)
        if inside.any():
            margin = h[None, :] - np.abs(p[inside])
            axis = np.argmin(margin, axis=1)
            rows = np.arange(len(axis))
            n_in = np.zeros((len(axis), 3))
            n_in[rows, axis] = np.where(p[inside][rows, axis] >= 0.0, 1.0, -1.0)
            normal_l[inside] = n_in
            q_in = p[inside].copy()
            q_in[rows, axis] = n_in[rows, axis] * h[axis]
            q[inside] = q_in
        return dist, c + p @ rot.T, c + q @ rot.T, normal_l @ rot.T

    def translated(self, offset: np.ndarray) -> "Box":
        return Box(tuple(np.asarray(self.center) + offset), self.half_extents, self.rotation_deg)

    def rotated_z(self, angle_rad: float, pivot: np.ndarray) -> "Box":
        rot = Rotation.from_euler("z", angle_rad) * Rotation.from_euler("xyz", self.rotation_deg, degrees=True)
        return Box(
            tuple(_rot_z_about(np.asarray(self.center, float), angle_rad, pivot)),
            self.half_extents,
            tuple(rot.as_euler("xyz", degrees=True)),
        )

    def to_dict(self) -> dict:
        return {
            "type": "box",
            "center_mm": list(self.center),
            "half_extents_mm": list(self.half_extents),
            "rotation_deg": list(self.rotation_deg),
        }


Primitive = Sphere | Capsule | Box


def _rot_z_about(p: np.ndarray, angle: float, pivot: np.ndarray) -> np.ndarray:
    cs, sn = np.cos(angle), np.sin(angle)
    d = p - pivot
    return pivot + np.array([cs * d[0] - sn * d[1], sn * d[0] + cs * d[1], d[2]])


def _segment_aabb(a: np.ndarray, b: np.ndarray, h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exact distance from segments to the box [-h, h] (0 when they intersect)."""
    d = b - a
    n = len(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lo = (-h[None, :] - a) / d
        t_hi = (h[None, :] - a) / d
    knots = np.concatenate([np.zeros((n, 1)), np.ones((n, 1)), t_lo, t_hi], axis=1)
    knots = np.where(np.isfinite(knots), np.clip(knots, 0.0, 1.0), 0.0)
    knots.sort(axis=1)
    lo, hi = knots[:, :-1], knots[:, 1:]
    mid = 0.5 * (lo + hi)
    p_mid = a[:, None, :] + mid[..., None] * d[:, None, :]
    target = np.where(p_mid > h, h, np.where(p_mid < -h, -h, np.nan))
    outside = ~np.isnan(target)
    off = np.where(outside, a[:, None, :] - np.nan_to_num(target), 0.0)
    dd = np.where(outside, d[:, None, :], 0.0)
    qa = np.sum(dd * dd, axis=2)
    qb = 2.0 * np.sum(dd * off, axis=2)
    qc = np.sum(off * off, axis=2)
    t_star = np.where(qa > _EPS, -qb / (2.0 * np.where(qa > _EPS, qa, 1.0)), lo)
    t_star = np.clip(t_star, lo, hi)
    f = qa * t_star**2 + qb * t_star + qc
    best = np.argmin(f, axis=1)
    rows = np.arange(n)
    dist = np.sqrt(np.maximum(f[rows, best], 0.0))
    return dist, t_star[rows, best]


def _deepest_inside(a: np.ndarray, b: np.ndarray, h: np.ndarray, iters: int = 80) -> Tuple[float, float]:
    """Maximise the (concave) inside depth along the segment by golden section."""

    def depth(t: float) -> float:
        return float(np.min(h - np.abs(a + t * (b - a))))

    g = (np.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, 1.0
    x1, x2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = depth(x1), depth(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = depth(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = depth(x1)
    t = 0.5 * (lo + hi)
    candidates = [(depth(0.0), 0.0), (depth(1.0), 1.0), (depth(t), t)]
    best_depth, best_t = max(candidates)
    return -best_depth, best_t


def primitive_from_dict(data: dict) -> Primitive:
    kind = data.get("type")
    if kind == "sphere":
        return Sphere(tuple(map(float, data["center_mm"])), float(data["radius_mm"]))
    if kind == "capsule":
        return Capsule(tuple(map(float, data["p0_mm"])), tuple(map(float, data["p1_mm"])), float(data["radius_mm"]))
    if kind == "box":
        return Box(
            tuple(map(float, data["center_mm"])),
            tuple(map(float, data["half_extents_mm"])),
            tuple(map(float, data.get("rotation_deg", (0.0, 0.0, 0.0)))),
        )
    raise ValueError(f"unknown primitive type {kind!r}")
