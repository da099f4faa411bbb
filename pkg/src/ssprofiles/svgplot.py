"""Minimal SVG line-plot emitter with fixed viewport and deterministic output."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WIDTH, HEIGHT = 800, 600
PALETTE = ("#1f4e9c", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#2c3e50", "#b7950b")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


@dataclass
class Panel:
    """One set of axes: polylines plus labelled markers, drawn in a box of the canvas."""

    title: str
    xlabel: str
    ylabel: str
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    lines: list = field(default_factory=list)  # (x, y, colour)
    markers: list = field(default_factory=list)  # (x, y, label)

    def add_line(self, x, y, colour: str | None = None) -> None:
        colour = colour or PALETTE[len(self.lines) % len(PALETTE)]
        self.lines.append((np.asarray(x, dtype=float), np.asarray(y, dtype=float), colour))

    def add_marker(self, x: float, y: float, label: str) -> None:
        self.markers.append((float(x), float(y), label))

    def render(self, left: float, top: float, w: float, h: float) -> list[str]:
        (x0, x1), (y0, y1) = self.xlim, self.ylim

        def px(x):
            return left + (x - x0) / (x1 - x0) * w

        def py(y):
            return top + h - (y - y0) / (y1 - y0) * h

        out = [f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(w)}" height="{_fmt(h)}" '
               f'fill="none" stroke="#000" stroke-width="1"/>',
               f'<text x="{_fmt(left + w / 2)}" y="{_fmt(top - 8)}" text-anchor="middle" font-size="14">{self.title}</text>',
               f'<text x="{_fmt(left + w / 2)}" y="{_fmt(top + h + 34)}" text-anchor="middle" font-size="12">{self.xlabel}</text>',
               f'<text x="{_fmt(left - 40)}" y="{_fmt(top + h / 2)}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 {_fmt(left - 40)} {_fmt(top + h / 2)})">{self.ylabel}</text>']
        for v, anchor, x, y in ((x0, "start", left, top + h + 16), (x1, "end", left + w, top + h + 16)):
            out.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" font-size="10">{v:.4g}</text>')
        for v, y in ((y0, top + h), (y1, top + 10)):
            out.append(f'<text x="{_fmt(left - 4)}" y="{_fmt(y)}" text-anchor="end" font-size="10">{v:.4g}</text>')
        if x0 < 0 < x1:
            out.append(f'<line x1="{_fmt(px(0))}" y1="{_fmt(top)}" x2="{_fmt(px(0))}" y2="{_fmt(top + h)}" '
                       f'stroke="#999" stroke-dasharray="4 3"/>')
        for x, y, colour in self.lines:
            inside = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1) & np.isfinite(x) & np.isfinite(y)
            # split into runs that stay inside the box
            edges = np.flatnonzero(np.diff(np.concatenate([[0], inside.astype(int), [0]])))
            for a, b in zip(edges[::2], edges[1::2]):
                if b - a < 2:
                    continue
                pts = " ".join(f"{_fmt(px(u))},{_fmt(py(v))}" for u, v in zip(x[a:b], y[a:b]))
                out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        for x, y, label in self.markers:
            if x0 <= x <= x1 and y0 <= y <= y1:
                out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="4" fill="#000"/>')
                out.append(f'<text x="{_fmt(px(x) + 6)}" y="{_fmt(py(y) - 6)}" font-size="12">{label}</text>')
        return out


def render_svg(panels: list[Panel], title: str = "") -> str:
    n = len(panels)
    margin_l, margin_r, margin_t, margin_b = 70, 20, 60, 60
    gap = 80
    w = (WIDTH - margin_l - margin_r - gap * (n - 1)) / n
    h = HEIGHT - margin_t - margin_b
    body = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>']
    if title:
        body.append(f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="16">{title}</text>')
    for i, panel in enumerate(panels):
        body.extend(panel.render(margin_l + i * (w + gap), margin_t, w, h))
    body.append("</svg>")
    return "\n".join(body) + "\n"
