"""Minimal SVG writer for triangle plots, speed diagrams, and profiles.

Hand-rolled on purpose: the outputs are simple polyline figures, and the
tests compare them structurally (element counts and coordinates), not as
bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["SvgFigure", "TAG_COLORS"]

TAG_COLORS = {
    "SCB": "#1f4fd0",
    "FCB": "#d02a1f",
    "UCB": "#c01fd0",
    "GUB": "#1fa83c",
}


@dataclass
class SvgFigure:
    width: int = 640
    height: int = 520
    margin: int = 56
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    _elements: list = field(default_factory=list)
    _bounds: list = field(default_factory=lambda: [math.inf, -math.inf, math.inf, -math.inf])

    def _track(self, xs, ys):
        b = self._bounds
        for x in xs:
            b[0] = min(b[0], x)
            b[1] = max(b[1], x)
        for y in ys:
            b[2] = min(b[2], y)
            b[3] = max(b[3], y)

    def polyline(self, points, color="#000000", stroke_width=1.5, dashed=False, label=None):
        pts = [(float(px), float(py)) for px, py in points]
        if len(pts) < 2:
            return self.scatter(pts, color=color, label=label)
        self._track([q[0] for q in pts], [q[1] for q in pts])
        self._elements.append(("polyline", pts, color, stroke_width, dashed, label))

    def scatter(self, points, color="#000000", radius=2.0, label=None):
        pts = [(float(px), float(py)) for px, py in points]
        if not pts:
            return
        self._track([q[0] for q in pts], [q[1] for q in pts])
        self._elements.append(("scatter", pts, color, radius, False, label))

    def _transform(self):
        x0, x1, y0, y1 = self._bounds
        if not (math.isfinite(x0) and math.isfinite(y0)):
            x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
        if x1 - x0 < 1e-12:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 - y0 < 1e-12:
            y0, y1 = y0 - 0.5, y1 + 0.5
        padx = 0.04 * (x1 - x0)
        pady = 0.04 * (y1 - y0)
        x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady
        w = self.width - 2 * self.margin
        h = self.height - 2 * self.margin

        def to_px(x, y):
            px = self.margin + (x - x0) / (x1 - x0) * w
            py = self.height - self.margin - (y - y0) / (y1 - y0) * h
            return px, py

        return to_px, (x0, x1, y0, y1)

    def to_string(self) -> str:
        to_px, (x0, x1, y0, y1) = self._transform()
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
        ]
        ax0, ay0 = to_px(x0, y0)
        ax1, ay1 = to_px(x1, y1)
        parts.append(
            f'<g class="axes" stroke="#444444" stroke-width="1" fill="none">'
            f'<path d="M {ax0:.2f} {ay1:.2f} L {ax0:.2f} {ay0:.2f} L {ax1:.2f} {ay0:.2f}"/></g>'
        )
        for k in range(5):
            xv = x0 + k * (x1 - x0) / 4
            yv = y0 + k * (y1 - y0) / 4
            px, py = to_px(xv, y0)
            parts.append(
                f'<text x="{px:.1f}" y="{ay0 + 18:.1f}" font-size="11" '
                f'text-anchor="middle" fill="#333">{xv:.3g}</text>'
            )
            px, py = to_px(x0, yv)
            parts.append(
                f'<text x="{ax0 - 6:.1f}" y="{py + 4:.1f}" font-size="11" '
                f'text-anchor="end" fill="#333">{yv:.3g}</text>'
            )
        if self.title:
            parts.append(
                f'<text x="{self.width / 2:.0f}" y="22" font-size="14" '
                f'text-anchor="middle" fill="#000">{self.title}</text>'
            )
        if self.xlabel:
            parts.append(
                f'<text x="{self.width / 2:.0f}" y="{self.height - 12}" font-size="12" '
                f'text-anchor="middle" fill="#000">{self.xlabel}</text>'
            )
        if self.ylabel:
            parts.append(
                f'<text x="16" y="{self.height / 2:.0f}" font-size="12" '
                f'text-anchor="middle" fill="#000" transform="rotate(-90 16 {self.height / 2:.0f})">'
                f"{self.ylabel}</text>"
            )
        legend_y = self.margin
        for kind, pts, color, size, dashed, label in self._elements:
            if kind == "polyline":
                coord = " ".join(
                    f"{to_px(q[0], q[1])[0]:.2f},{to_px(q[0], q[1])[1]:.2f}" for q in pts
                )
                dash = ' stroke-dasharray="6 4"' if dashed else ""
                parts.append(
                    f'<polyline fill="none" stroke="{color}" stroke-width="{size}"{dash} '
                    f'points="{coord}"/>'
                )
            else:
                for q in pts:
                    px, py = to_px(q[0], q[1])
                    parts.append(
                        f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{size}" fill="{color}"/>'
                    )
            if label:
                parts.append(
                    f'<text x="{self.width - self.margin + 4}" y="{legend_y}" '
                    f'font-size="11" fill="{color}">{label}</text>'
                )
                legend_y += 14
        parts.append("</svg>")
        return "\n".join(parts)

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_string())
