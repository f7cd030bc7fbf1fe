"""Self-contained SVG 1.1 emitters for level sets and disc portraits."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .compactify import InfinityDirection, infinity_singularities
from .hamiltonian import Window
from .levels import LevelCurveBranch, trace_level
from .parser import format_poly
from .poly import Polynomial, evaluate_float

SIZE = 600
MARGIN = 40
HEADER = ('<?xml version="1.0" encoding="UTF-8"?>\n'
          '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
          f'width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">\n')
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _num(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _path(pts, style: str, cls: str) -> str:
    if len(pts) == 0:
        return ""
    d = "M" + " L".join(f"{_num(x)},{_num(y)}" for x, y in pts)
    return f'<path class="{cls}" d="{d}" style="{style}"/>\n'


def _direction_label(d: InfinityDirection) -> str:
    s = "vertical" if d.vertical else f"slope {d.approx_slope:.4g}"
    return f"{s} (m={d.multiplicity})"


class _Frame:
    """Affine map from a window to the drawing square (y up)."""

    def __init__(self, window: Window):
        self.w = window
        side = SIZE - 2 * MARGIN
        self.k = side / max(window.x_max - window.x_min, window.y_max - window.y_min)

    def __call__(self, x, y):
        return (MARGIN + (x - self.w.x_min) * self.k,
                SIZE - MARGIN - (y - self.w.y_min) * self.k)

    def ray_end(self, angle: float):
        """Where the ray from the window centre at ``angle`` meets the frame."""
        cx, cy = self.w.center
        dx, dy = math.cos(angle), math.sin(angle)
        ts = []
        if dx:
            ts += [(self.w.x_max - cx) / dx, (self.w.x_min - cx) / dx]
        if dy:
            ts += [(self.w.y_max - cy) / dy, (self.w.y_min - cy) / dy]
        t = min(v for v in ts if v > 0)
        return cx + t * dx, cy + t * dy


def levelset_svg(f: Polynomial, level: float, branches: Sequence[LevelCurveBranch],
                 window: Window) -> str:
    fr = _Frame(window)
    out = [HEADER, f"<!-- level set {_esc(format_poly(f))} = {level!r} -->\n",
           f"<!-- branches: {len(branches)} -->\n"]
    x0, y0 = fr(window.x_min, window.y_max)
    x1, y1 = fr(window.x_max, window.y_min)
    out.append(f'<rect class="frame" x="{_num(x0)}" y="{_num(y0)}" width="{_num(x1 - x0)}" '
               f'height="{_num(y1 - y0)}" style="fill:none;stroke:#000;stroke-width:1"/>\n')
    if not f.is_constant():
        for d in infinity_singularities(f):
            for a in (d.angle(), d.angle() + math.pi):
                ex, ey = fr(*fr.ray_end(a))
                cx, cy = fr(*window.center)
                out.append(f'<line class="infinity-ray" x1="{_num(cx)}" y1="{_num(cy)}" '
                           f'x2="{_num(ex)}" y2="{_num(ey)}" '
                           'style="stroke:#999;stroke-width:0.5;stroke-dasharray:2,3"/>\n')
                out.append(f'<text class="infinity-label" x="{_num(ex)}" y="{_num(ey)}" '
                           f'style="font-family:sans-serif;font-size:9px;fill:#555">'
                           f'{_esc(_direction_label(d))}</text>\n')
    for k, b in enumerate(branches):
        color = PALETTE[k % len(PALETTE)]
        style = f"fill:none;stroke:{color};stroke-width:1.5"
        if b.stalled:
            out.append(f"<!-- branch {k} stalled: tracing stopped at a singular point -->\n")
            style += ";stroke-dasharray:6,4"
        pts = [fr(x, y) for x, y in b.points.tolist()]
        out.append(_path(pts, style, "branch-stalled" if b.stalled else "branch"))
    out.append("</svg>\n")
    return "".join(out)


def compress(x, y):
    """Radial homeomorphism of the plane onto the open unit disc."""
    r = np.hypot(x, y)
    return x / (1 + r), y / (1 + r)


def _fan_levels(p: Polynomial, n: int) -> list[float]:
    xs = np.linspace(-3.0, 3.0, 61)
    XX, YY = np.meshgrid(xs, xs, indexing="ij")
    vals = evaluate_float(p, (XX, YY)).ravel()
    return [float(v) for v in np.quantile(vals, np.linspace(0.1, 0.9, n))]


def portrait_svg(f: Polynomial, g: Polynomial, *, n_levels: int = 7,
                 trace_window: Window = Window(-60.0, 60.0, -60.0, 60.0)) -> str:
    """Poincare-disc picture: level curves of ``f`` and ``g`` and their infinity points.

    Infinity points of ``H_f`` are circles, those of ``H_g`` squares; each
    real direction gives an antipodal pair on the unit circle.
    """
    R = (SIZE - 2 * MARGIN) / 2
    C = SIZE / 2

    def to_px(u, v):
        return C + R * u, C - R * v

    out = [HEADER, f"<!-- portrait f = {_esc(format_poly(f))}; g = {_esc(format_poly(g))} -->\n",
           f'<circle class="equator" cx="{_num(C)}" cy="{_num(C)}" r="{_num(R)}" '
           'style="fill:none;stroke:#000;stroke-width:1.2"/>\n']
    for name, p, color in (("f", f, "#1f77b4"), ("g", g, "#d62728")):
        for u in _fan_levels(p, n_levels):
            for b in trace_level(p, u, trace_window, seed_grid=64):
                X, Y = compress(b.points[:, 0], b.points[:, 1])
                pts = [to_px(a, c) for a, c in zip(X.tolist(), Y.tolist())]
                out.append(_path(pts, f"fill:none;stroke:{color};stroke-width:0.8;"
                                      "stroke-opacity:0.7", f"level-{name}"))
    for name, p in (("f", f), ("g", g)):
        for d in infinity_singularities(p):
            for a in (d.angle(), d.angle() + math.pi):
                px, py = to_px(math.cos(a), math.sin(a))
                title = f"<title>{name}: {_esc(_direction_label(d))}</title>"
                if name == "f":
                    out.append(f'<circle class="inf-f" cx="{_num(px)}" cy="{_num(py)}" r="6" '
                               f'style="fill:#1f77b4;stroke:#000">{title}</circle>\n')
                else:
                    out.append(f'<rect class="inf-g" x="{_num(px - 5)}" y="{_num(py - 5)}" '
                               'width="10" height="10" '
                               f'style="fill:none;stroke:#d62728;stroke-width:2">{title}</rect>\n')
    out.append("</svg>\n")
    return "".join(out)
