"""Static SVG figures: trajectory overlay and normalised metric bar chart."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .dynamics import wind_at
from .metrics import METRICS, Comparison

PALETTE = {"pinn": "#1f77b4", "astar": "#d62728", "kinorrt": "#2ca02c"}
FALLBACK = ["#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _colour(name: str, i: int) -> str:
    return PALETTE.get(name, FALLBACK[i % len(FALLBACK)])


def _f(v: float) -> str:
    return f"{v:.3f}"


class WorldMap:
    """Uniform world-to-pixel map with y pointing up in world coordinates."""

    def __init__(self, bounds, width: float = 640.0, margin: float = 30.0):
        self.b = bounds
        self.margin = margin
        span_x = bounds.xmax - bounds.xmin
        span_y = bounds.ymax - bounds.ymin
        self.scale = (width - 2 * margin) / span_x
        self.width = width
        self.height = span_y * self.scale + 2 * margin

    def __call__(self, x, y):
        px = self.margin + (np.asarray(x) - self.b.xmin) * self.scale
        py = self.height - self.margin - (np.asarray(y) - self.b.ymin) * self.scale
        return px, py


def trajectory_figure(scenario, records=(), wind_time: float = 0.0, quiver_n: int = 12) -> str:
    m = WorldMap(scenario.bounds)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(m.width + 140)}" height="{_f(m.height)}" '
           f'data-scale="{m.scale:.6f}">',
           f'<rect x="0" y="0" width="{_f(m.width + 140)}" height="{_f(m.height)}" fill="white"/>']
    x0, y0 = m(scenario.bounds.xmin, scenario.bounds.ymax)
    x1, y1 = m(scenario.bounds.xmax, scenario.bounds.ymin)
    out.append(f'<rect class="bounds" x="{_f(x0)}" y="{_f(y0)}" width="{_f(x1 - x0)}" height="{_f(y1 - y0)}" '
               'fill="none" stroke="black"/>')

    # wind quiver at a fixed time
    w = scenario.dynamics.wind
    gx = np.linspace(scenario.bounds.xmin, scenario.bounds.xmax, quiver_n + 2)[1:-1]
    gy = np.linspace(scenario.bounds.ymin, scenario.bounds.ymax, quiver_n + 2)[1:-1]
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    WX, WY = wind_at(w, X, Y, wind_time)
    peak = max(abs(w.A_x), abs(w.A_y), 1e-12)
    arrow = 0.4 * (gx[1] - gx[0] if len(gx) > 1 else 1.0) / peak
    out.append(f'<g class="wind" data-time="{wind_time:g}" stroke="#999999" stroke-width="1">')
    for xw, yw, wx, wy in zip(X.ravel(), Y.ravel(), WX.ravel(), WY.ravel()):
        ax, ay = m(xw, yw)
        bx, by = m(xw + arrow * wx, yw + arrow * wy)
        out.append(f'<line x1="{_f(ax)}" y1="{_f(ay)}" x2="{_f(bx)}" y2="{_f(by)}"/>')
        out.append(f'<circle cx="{_f(bx)}" cy="{_f(by)}" r="1.2" fill="#999999"/>')
    out.append("</g>")

    for i, o in enumerate(scenario.obstacles):
        cx, cy = m(o.cx, o.cy)
        out.append(f'<circle class="obstacle" data-index="{i}" cx="{_f(cx)}" cy="{_f(cy)}" '
                   f'r="{_f(o.r * m.scale)}" fill="#cccccc" stroke="#555555"/>')

    legend = []
    for i, tr in enumerate(records):
        name = tr.source or f"trajectory{i}"
        colour = _colour(name, i)
        px, py = m(tr.x, tr.y)
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(px, py))
        out.append(f'<polyline class="trajectory" data-planner="{escape(name)}" data-points="{len(tr)}" '
                   f'points="{pts}" fill="none" stroke="{colour}" stroke-width="2"/>')
        legend.append((name, colour))

    for label, s, colour in (("start", scenario.start, "#000000"), ("goal", scenario.goal, "#ff7f0e")):
        px, py = m(s[0], s[1])
        out.append(f'<circle class="{label}" cx="{_f(px)}" cy="{_f(py)}" r="5" fill="{colour}"/>')
        legend.append((label, colour))

    lx = m.width + 10
    for k, (name, colour) in enumerate(legend):
        ly = 30 + 20 * k
        out.append(f'<rect x="{_f(lx)}" y="{_f(ly - 9)}" width="12" height="12" fill="{colour}"/>')
        out.append(f'<text x="{_f(lx + 18)}" y="{_f(ly + 2)}" font-size="12" font-family="sans-serif">'
                   f'{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def comparison_chart(cmp: Comparison, width: float = 720.0, height: float = 360.0) -> str:
    """Grouped bars, one group per metric, heights = normalised values."""
    planners = [r.planner for r in cmp.reports]
    n_p = len(planners)
    left, right, top, bottom = 50.0, 130.0, 20.0, 40.0
    plot_w = width - left - right
    plot_h = height - top - bottom
    group_w = plot_w / len(METRICS)
    bar_w = 0.8 * group_w / max(n_p, 1)
    base_y = top + plot_h
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}">',
           f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="white"/>',
           f'<line x1="{_f(left)}" y1="{_f(base_y)}" x2="{_f(left + plot_w)}" y2="{_f(base_y)}" stroke="black"/>',
           f'<line x1="{_f(left)}" y1="{_f(top)}" x2="{_f(left)}" y2="{_f(base_y)}" stroke="black"/>']
    for tick in (0.0, 0.5, 1.0):
        ty = base_y - tick * plot_h
        out.append(f'<text x="{_f(left - 8)}" y="{_f(ty + 4)}" font-size="11" text-anchor="end" '
                   f'font-family="sans-serif">{tick:.1f}</text>')
    for g, metric in enumerate(METRICS):
        gx = left + g * group_w + 0.1 * group_w
        for k, name in enumerate(planners):
            v = cmp.normalized[name][metric]
            v = 0.0 if not math.isfinite(v) else v
            h = v * plot_h
            out.append(f'<rect class="bar" data-metric="{metric}" data-planner="{escape(name)}" '
                       f'data-value="{v:.3f}" x="{_f(gx + k * bar_w)}" y="{_f(base_y - h)}" '
                       f'width="{_f(bar_w)}" height="{_f(h)}" fill="{_colour(name, k)}"/>')
        out.append(f'<text x="{_f(left + (g + 0.5) * group_w)}" y="{_f(base_y + 18)}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif">{metric}</text>')
    for k, name in enumerate(planners):
        ly = top + 20 * k + 10
        out.append(f'<rect x="{_f(width - right + 15)}" y="{_f(ly - 9)}" width="12" height="12" '
                   f'fill="{_colour(name, k)}"/>')
        out.append(f'<text x="{_f(width - right + 33)}" y="{_f(ly + 2)}" font-size="12" '
                   f'font-family="sans-serif">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
