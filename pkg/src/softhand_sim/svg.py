"""Minimal deterministic SVG output (1 mm = 1 px for geometric views)."""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

FINGER_COLORS: Dict[str, str] = {
    "thumb": "#d62728",
    "index": "#ff7f0e",
    "middle": "#2ca02c",
    "third": "#1f77b4",
    "little": "#9467bd",
}
_DEFAULT_COLOR = "#555555"


def _f(v: float) -> str:
    return f"{v:.2f}"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class Canvas:
    """Collects SVG elements; ``panel`` maps model coordinates to a placed view."""

    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.items: List[str] = []

    def add(self, element: str) -> None:
        self.items.append(element)

    def text(self, x: float, y: float, label: str, size: int = 10, anchor: str = "start") -> None:
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" font-family="sans-serif" '
                 f'text-anchor="{anchor}">{_esc(label)}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(self.width)}" height="{_f(self.height)}" '
                f'viewBox="0 0 {_f(self.width)} {_f(self.height)}">')
        return "\n".join([head, f'<rect width="100%" height="100%" fill="white"/>', *self.items, "</svg>"]) + "\n"


class Panel:
    """A view placed on the canvas: model (u, v) mm -> canvas px, v pointing up."""

    def __init__(self, canvas: Canvas, origin: Tuple[float, float], u_range: Tuple[float, float],
                 v_range: Tuple[float, float], title: str = ""):
        self.c = canvas
        self.ox, self.oy = origin
        self.u0, self.u1 = u_range
        self.v0, self.v1 = v_range
        self.c.add(f'<rect x="{_f(self.ox)}" y="{_f(self.oy)}" width="{_f(self.u1 - self.u0)}" '
                   f'height="{_f(self.v1 - self.v0)}" fill="none" stroke="#cccccc"/>')
        if title:
            canvas.text(self.ox + 2, self.oy - 4, title)

    def xy(self, u: float, v: float) -> Tuple[float, float]:
        return self.ox + (u - self.u0), self.oy + (self.v1 - v)

    def circle(self, u: float, v: float, r: float, color: str, fill: Optional[str] = None, opacity: float = 1.0) -> None:
        x, y = self.xy(u, v)
        self.c.add(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{fill or color}" '
                   f'stroke="{color}" fill-opacity="{opacity:.2f}"/>')

    def polyline(self, pts: Iterable[Tuple[float, float]], color: str, width: float = 1.0,
                 closed: bool = False, opacity: float = 1.0) -> None:
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in (self.xy(u, v) for u, v in pts))
        tag = "polygon" if closed else "polyline"
        self.c.add(f'<{tag} points="{coords}" fill="none" stroke="{color}" stroke-width="{_f(width)}" '
                   f'stroke-opacity="{opacity:.2f}" stroke-linecap="round" stroke-linejoin="round"/>')

    def points(self, uv: np.ndarray, color: str, r: float = 0.6) -> None:
        for u, v in uv:
            self.circle(float(u), float(v), r, color)


def padded_range(values: np.ndarray, pad: float = 10.0) -> Tuple[float, float]:
    return float(np.floor(values.min() - pad)), float(np.ceil(values.max() + pad))


def two_views(
    layers: Sequence[Tuple[np.ndarray, str, str]],
    palm: Tuple[float, float],
    title: str = "",
) -> Canvas:
    """Top (x-y) and side (y-z) views of point/segment layers plus the palm outline.

    ``layers`` holds ``(points (n, 3), color, kind)`` with kind ``"points"`` or
    ``"chain"`` (a polyline) or ``"cap"`` (a capsule axis drawn with width).
    """
    width, length = palm
    allp = np.vstack([p for p, _, _ in layers] + [np.array([[-width / 2, 0, 0], [width / 2, length, 0]])])
    xr, yr, zr = padded_range(allp[:, 0]), padded_range(allp[:, 1]), padded_range(allp[:, 2])
    margin = 20.0
    cw = (xr[1] - xr[0]) + (yr[1] - yr[0]) + 3 * margin
    ch = max(yr[1] - yr[0], zr[1] - zr[0]) + 2 * margin + (12 if title else 0)
    canvas = Canvas(cw, ch)
    top_y = margin + (12 if title else 0)
    if title:
        canvas.text(margin, 14, title, size=12)
    top = Panel(canvas, (margin, top_y), xr, yr, "top view (x, y)")
    side = Panel(canvas, (2 * margin + (xr[1] - xr[0]), top_y), yr, zr, "side view (y, z)")
    half = width / 2
    top.polyline([(-half, 0), (half, 0), (half, length), (-half, length)], "#888888", closed=True)
    side.polyline([(0, 0), (length, 0)], "#888888", width=2)
    for pts, color, kind in layers:
        if kind == "points":
            top.points(pts[:, :2], color)
            side.points(pts[:, 1:], color)
        else:
            w = 1.5 if kind == "chain" else 4.0
            top.polyline([(p[0], p[1]) for p in pts], color, width=w, opacity=0.8)
            side.polyline([(p[1], p[2]) for p in pts], color, width=w, opacity=0.8)
    return canvas


def bar_chart(labels: Sequence[str], series: Sequence[Tuple[str, Sequence[float], str]], y_max: float,
              title: str = "") -> str:
    """Grouped bar chart; each series is (name, values, color)."""
    group_w, bar_w, plot_h, left, top = 46.0, 18.0, 200.0, 40.0, 30.0
    width = left + group_w * len(labels) + 120
    height = top + plot_h + 90
    c = Canvas(width, height)
    if title:
        c.text(left, 18, title, size=12)
    base = top + plot_h
    c.add(f'<line x1="{_f(left)}" y1="{_f(base)}" x2="{_f(left + group_w * len(labels))}" y2="{_f(base)}" stroke="black"/>')
    c.add(f'<line x1="{_f(left)}" y1="{_f(top)}" x2="{_f(left)}" y2="{_f(base)}" stroke="black"/>')
    for tick in range(int(y_max) + 1):
        y = base - plot_h * tick / y_max
        c.text(left - 6, y + 3, str(tick), size=9, anchor="end")
    for i, label in enumerate(labels):
        gx = left + group_w * i + 4
        for k, (_, values, color) in enumerate(series):
            h = plot_h * min(values[i], y_max) / y_max
            c.add(f'<rect x="{_f(gx + k * bar_w)}" y="{_f(base - h)}" width="{_f(bar_w - 2)}" height="{_f(h)}" fill="{color}"/>')
        lx, ly = gx + bar_w, base + 8
        c.add(f'<text x="{_f(lx)}" y="{_f(ly)}" font-size="9" font-family="sans-serif" text-anchor="end" '
              f'transform="rotate(-60 {_f(lx)} {_f(ly)})">{_esc(label)}</text>')
    lx = left + group_w * len(labels) + 10
    for k, (name, _, color) in enumerate(series):
        c.add(f'<rect x="{_f(lx)}" y="{_f(top + 14 * k)}" width="10" height="10" fill="{color}"/>')
        c.text(lx + 14, top + 14 * k + 9, name, size=10)
    return c.render()
