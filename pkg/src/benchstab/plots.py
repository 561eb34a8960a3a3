"""Standalone SVG figures and CSV tables, written without a plotting library.

Coordinates are printed with fixed precision so the output is byte-stable.
"""

from __future__ import annotations

import csv
import io
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .significance import CdSummary
from .stability import StabilityFit

__all__ = ["cd_diagram_svg", "csv_table", "stability_curve_svg"]

W, H = 640, 400
ML, MR, MT, MB = 64, 24, 24, 52


def _f(x: float) -> str:
    return f"{x:.2f}"


def csv_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(x) for x in np.arange(start, hi + step * 1e-9, step)]


def _polyline(xs, ys, sx, sy, style: str) -> str:
    pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" {style} points="{pts}"/>'


def stability_curve_svg(points: Sequence[tuple[float, float, float]], fit: StabilityFit | None,
                        n_max: float | None = None) -> str:
    """Observed mean tau with error bars, the fitted two-benchmark curve and the implied oracle curve."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n_hi = float(max(n_max or 0, pts[:, 0].max() if len(pts) else 1.0))
    lo_y = float(min((pts[:, 1] - pts[:, 2]).min() if len(pts) else 0.0, 1.0))
    grid = np.linspace(1.0, n_hi, 200)
    if fit is not None:
        lo_y = min(lo_y, float(np.min(1.0 - fit.disagreement(grid[grid >= pts[:, 0].min()]))) if len(pts) else lo_y)
    lo_y = max(-1.0, np.floor(lo_y * 20) / 20 - 0.05)
    hi_y = 1.0

    def sx(x):
        return ML + (x - 0.0) / (n_hi - 0.0) * (W - ML - MR)

    def sy(y):
        return MT + (hi_y - y) / (hi_y - lo_y) * (H - MT - MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
           'font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>']
    x0, x1, y0, y1 = sx(0), sx(n_hi), sy(lo_y), sy(hi_y)
    out.append(f'<path d="M{_f(x0)},{_f(y1)} V{_f(y0)} H{_f(x1)}" stroke="black" fill="none"/>')
    for t in _nice_ticks(0.0, n_hi):
        out.append(f'<line x1="{_f(sx(t))}" y1="{_f(y0)}" x2="{_f(sx(t))}" y2="{_f(y0 + 5)}" stroke="black"/>')
        out.append(f'<text x="{_f(sx(t))}" y="{_f(y0 + 18)}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(lo_y, hi_y):
        out.append(f'<line x1="{_f(x0 - 5)}" y1="{_f(sy(t))}" x2="{_f(x0)}" y2="{_f(sy(t))}" stroke="black"/>')
        out.append(f'<text x="{_f(x0 - 8)}" y="{_f(sy(t) + 4)}" text-anchor="end">{t:.2f}</text>')
    out.append(f'<text x="{_f((x0 + x1) / 2)}" y="{H - 12}" text-anchor="middle">number of datasets N</text>')
    out.append(f'<text x="16" y="{_f((y0 + y1) / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_f((y0 + y1) / 2)})">Kendall tau</text>')
    if fit is not None:
        d = fit.disagreement(grid)
        out.append(_polyline(grid, 1.0 - d, sx, sy, 'stroke="#1f77b4" stroke-width="2"'))
        out.append(_polyline(grid, 1.0 - d / 2.0, sx, sy, 'stroke="#d62728" stroke-width="2" stroke-dasharray="6,4"'))
    for n, m, se in pts:
        out.append(f'<line x1="{_f(sx(n))}" y1="{_f(sy(m - se))}" x2="{_f(sx(n))}" y2="{_f(sy(m + se))}" stroke="#333"/>')
        out.append(f'<circle cx="{_f(sx(n))}" cy="{_f(sy(m))}" r="3.5" fill="#333"/>')
    lx, ly = x1 - 210, sy(lo_y) - 60
    legend = [("#333", "", "observed (mean ± SE)"), ("#1f77b4", "", "fitted, two benchmarks"),
              ("#d62728", ' stroke-dasharray="6,4"', "implied, against the oracle")]
    for i, (col, dash, label) in enumerate(legend):
        yy = ly + 16 * i
        out.append(f'<line x1="{_f(lx)}" y1="{_f(yy)}" x2="{_f(lx + 24)}" y2="{_f(yy)}" stroke="{col}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{_f(lx + 30)}" y="{_f(yy + 4)}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cd_diagram_svg(cd: CdSummary) -> str:
    """Average-rank axis with pipelines labelled on both sides and bars over indistinguishable runs."""
    k = len(cd.pipeline_ids)
    order = np.argsort(cd.average_ranks, kind="stable")
    half = (k + 1) // 2
    row_h = 20
    height = 90 + row_h * half + 14 * len(cd.cliques)
    left, right = 150, W - 150

    def sx(r):
        return left + (r - 1) / max(k - 1, 1) * (right - left)

    axis_y = 40
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" '
           'font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{W}" height="{height}" fill="white"/>',
           f'<line x1="{_f(sx(1))}" y1="{axis_y}" x2="{_f(sx(k))}" y2="{axis_y}" stroke="black"/>']
    for r in range(1, k + 1):
        out.append(f'<line x1="{_f(sx(r))}" y1="{axis_y - 5}" x2="{_f(sx(r))}" y2="{axis_y}" stroke="black"/>')
        out.append(f'<text x="{_f(sx(r))}" y="{axis_y - 9}" text-anchor="middle">{r}</text>')
    bar_top = axis_y + 10
    for c_i, clique in enumerate(cd.cliques):
        if len(clique) < 2:
            continue
        rs = [cd.average_ranks[cd.pipeline_ids.index(p)] for p in clique]
        y = bar_top + 8 * c_i
        out.append(f'<line x1="{_f(sx(min(rs)) - 3)}" y1="{y}" x2="{_f(sx(max(rs)) + 3)}" y2="{y}" '
                   'stroke="black" stroke-width="3"/>')
    label_top = bar_top + 8 * len(cd.cliques) + 14
    for pos, j in enumerate(order):
        r = cd.average_ranks[j]
        name = escape(cd.pipeline_ids[j])
        if pos < half:
            y = label_top + row_h * pos
            out.append(f'<path d="M{_f(sx(r))},{axis_y} V{y} H{left - 10}" stroke="#555" fill="none"/>')
            out.append(f'<text x="{left - 14}" y="{y + 4}" text-anchor="end">{name} ({r:.2f})</text>')
        else:
            y = label_top + row_h * (k - 1 - pos)
            out.append(f'<path d="M{_f(sx(r))},{axis_y} V{y} H{right + 10}" stroke="#555" fill="none"/>')
            out.append(f'<text x="{right + 14}" y="{y + 4}">({r:.2f}) {name}</text>')
    out.append(f'<text x="{W // 2}" y="{height - 8}" text-anchor="middle">'
               f'average rank (bars: not distinguishable at alpha = {cd.alpha:g})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
