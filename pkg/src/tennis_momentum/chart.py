"""Deterministic SVG line charts for momentum series."""

from __future__ import annotations

import math
import warnings
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import MomentumWarning
from .ingest import format_elapsed
from .topsis import MomentumSeries

WIDTH, HEIGHT = 800, 400
LEFT, RIGHT, TOP, BOTTOM = 64, 24, 44, 52
COLORS = ("#1f77b4", "#d62728")


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


_TIME_STEPS = (1, 2, 5, 10, 15, 30, 60, 120, 300, 600, 900, 1800, 3600, 7200)


def _time_step(span: float, target: int = 6) -> float:
    raw = span / target
    for s in _TIME_STEPS:
        if raw <= s:
            return s
    return _nice_step(span / 3600, target) * 3600


def _ticks(lo: float, hi: float, target: int = 6, step: float | None = None) -> list[float]:
    step = step or _nice_step(hi - lo, target)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 10))
        v += step
    return out


def _f(x: float) -> str:
    return f"{x:.2f}"


def render_svg(series: MomentumSeries, title: str, mode: str = "closeness", cumulative_points=None) -> str:
    """SVG text for a two-player line chart.

    ``mode="closeness"`` plots the TOPSIS score on a fixed 0..1 axis;
    ``mode="points"`` plots ``cumulative_points`` (an n x 2 array) instead.
    """
    x = np.asarray(series.elapsed, dtype=float)
    if mode == "points":
        y = np.asarray(cumulative_points, dtype=float)
        y_lo, y_hi = 0.0, max(1.0, float(y.max()))
        y_label = "points won"
    else:
        y = np.asarray(series.closeness, dtype=float)
        y_lo, y_hi = 0.0, 1.0
        y_label = "closeness"
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return TOP + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<g class="axes" stroke="black" fill="none">'
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}"/>'
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}"/></g>',
    ]
    ticks = ['<g class="ticks">']
    for v in _ticks(x_lo, x_hi, step=_time_step(x_hi - x_lo)):
        px = _f(sx(v))
        ticks.append(f'<line x1="{px}" y1="{TOP + ph}" x2="{px}" y2="{TOP + ph + 5}" stroke="black"/>'
                     f'<text x="{px}" y="{TOP + ph + 18}" text-anchor="middle">{format_elapsed(int(v))}</text>')
    for v in _ticks(y_lo, y_hi, 5):
        py = _f(sy(v))
        ticks.append(f'<line x1="{LEFT - 5}" y1="{py}" x2="{LEFT}" y2="{py}" stroke="black"/>'
                     f'<text x="{LEFT - 8}" y="{py}" text-anchor="end" dominant-baseline="middle">{v:g}</text>')
    ticks.append("</g>")
    out += ticks
    out.append(f'<text x="{LEFT + pw / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle">elapsed time</text>')
    out.append(f'<text x="14" y="{TOP + ph / 2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {TOP + ph / 2:.0f})">{y_label}</text>')

    for p in (0, 1):
        color = COLORS[p]
        pts = [(sx(a), sy(b)) for a, b in zip(x, y[:, p])]
        label = quoteattr(series.players[p])
        if len(pts) == 1:
            cx, cy = pts[0]
            out.append(f'<circle class="series" data-player={label} cx="{_f(cx)}" cy="{_f(cy)}" r="3" fill="{color}"/>')
        else:
            coords = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
            out.append(f'<polyline class="series" data-player={label} points="{coords}" '
                       f'fill="none" stroke="{color}" stroke-width="1.5"/>')

    lx = LEFT + pw - 150
    out.append('<g class="legend">')
    for p in (0, 1):
        ly = TOP + 8 + 16 * p
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{COLORS[p]}" stroke-width="2"/>'
                   f'<text x="{lx + 24}" y="{ly}" dominant-baseline="middle">{escape(series.players[p])}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_chart(series: MomentumSeries, slice="whole", path=None, mode: str = "closeness",
               cumulative_points=None) -> str | None:
    """Render the whole match or a single set (``slice=set_no``) and optionally write it.

    An empty series (or empty set slice) is a no-op with a warning.
    """
    title = f"{series.match_id}: {series.players[0]} vs {series.players[1]}"
    if slice != "whole":
        keep = series.set_no == int(slice)
        if cumulative_points is not None:
            cumulative_points = np.asarray(cumulative_points)[keep]
        series = series.slice_set(int(slice))
        title += f", set {int(slice)}"
    if len(series) == 0:
        warnings.warn(f"no points to chart for slice {slice!r}", MomentumWarning, stacklevel=2)
        return None
    svg = render_svg(series, title, mode, cumulative_points)
    if path is not None:
        Path(path).write_text(svg, encoding="utf-8", newline="\n")
    return svg
