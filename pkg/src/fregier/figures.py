"""Minimal SVG 1.1 emitter for the experiment figures.

World coordinates (y up) are mapped onto a fixed 1000 x 700 viewBox with a
5% margin, preserving aspect ratio.  Output is plain text so identical input
gives byte-identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .conic_core import EllipseAxes

WIDTH, HEIGHT = 1000, 700
MARGIN = 0.05


def ellipse_polyline(E: EllipseAxes, count: int = 256) -> np.ndarray:
    t = 2 * math.pi * np.arange(count + 1) / count
    return np.array([E.point(v) for v in t])


class Canvas:
    def __init__(self, xmin: float, xmax: float, ymin: float, ymax: float, title: str = ""):
        w = max(xmax - xmin, 1e-12)
        h = max(ymax - ymin, 1e-12)
        inner_w = WIDTH * (1 - 2 * MARGIN)
        inner_h = HEIGHT * (1 - 2 * MARGIN)
        self.scale = min(inner_w / w, inner_h / h)
        # center the drawing inside the margins
        self.ox = WIDTH / 2 - self.scale * (xmin + xmax) / 2
        self.oy = HEIGHT / 2 + self.scale * (ymin + ymax) / 2
        self.items: list[str] = []
        self.title = title

    @classmethod
    def fitting(cls, E: EllipseAxes, title: str = "") -> "Canvas":
        pts = ellipse_polyline(E, 64)
        return cls(pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max(), title)

    def _xy(self, p) -> tuple[float, float]:
        return self.ox + self.scale * float(p[0]), self.oy - self.scale * float(p[1])

    def polyline(self, pts, stroke: str = "black", width: float = 1.5, dash: str | None = None):
        coords = " ".join("{:.3f},{:.3f}".format(*self._xy(p)) for p in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>')

    def line(self, p, q, stroke: str = "gray", width: float = 0.6):
        (x1, y1), (x2, y2) = self._xy(p), self._xy(q)
        self.items.append(
            f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" stroke="{stroke}" stroke-width="{width}"/>'
        )

    def ellipse(self, E: EllipseAxes, stroke: str = "black", width: float = 1.5, dash: str | None = None):
        self.polyline(ellipse_polyline(E), stroke, width, dash)

    def circle(self, center, r: float, stroke: str = "black", width: float = 1.0, fill: str = "none"):
        x, y = self._xy(center)
        self.items.append(
            f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{self.scale * r:.3f}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>'
        )

    def dot(self, p, label: str = "", color: str = "black"):
        x, y = self._xy(p)
        self.items.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="4" fill="{color}"/>')
        if label:
            self.items.append(f'<text x="{x + 6:.3f}" y="{y - 6:.3f}" font-size="16">{escape(label)}</text>')

    def render(self) -> str:
        head = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        if self.title:
            head.append(f'<title>{escape(self.title)}</title>')
        return "\n".join(head + self.items + ["</svg>"]) + "\n"
