"""Minimal SVG line charts of target depth against time."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidConfig

_COLORS = {"gt": "#000000", "network": "#d62728", "pnp": "#1f77b4", "fused": "#2ca02c"}
_W, _H = 720, 360
_MARGIN = (60, 20, 30, 45)  # left, right, top, bottom


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 1e-12, step)


def depth_chart_svg(series: dict[str, tuple], title: str = "target depth") -> str:
    """Render ``{name: (times, depths)}`` as one SVG document."""
    series = {k: (np.asarray(t, float), np.asarray(z, float)) for k, (t, z) in series.items() if len(t)}
    if not series:
        raise InvalidConfig("nothing to plot")
    t_all = np.concatenate([t for t, _ in series.values()])
    z_all = np.concatenate([z for _, z in series.values()])
    t0, t1 = float(t_all.min()), float(t_all.max())
    z0, z1 = float(z_all.min()), float(z_all.max())
    if t1 == t0:
        t1 = t0 + 1.0
    pad = 0.05 * (z1 - z0) or 0.5
    z0, z1 = z0 - pad, z1 + pad
    left, right, top, bottom = _MARGIN
    pw, ph = _W - left - right, _H - top - bottom

    def sx(t):
        return left + (t - t0) / (t1 - t0) * pw

    def sy(z):
        return top + (z1 - z) / (z1 - z0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">'
        f"{escape(title)}</text>",
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
    ]
    for tv in _ticks(t0, t1):
        x = sx(tv)
        out.append(f'<line x1="{x:.1f}" y1="{top + ph}" x2="{x:.1f}" y2="{top + ph + 4}" stroke="#888"/>')
        out.append(f'<text x="{x:.1f}" y="{top + ph + 16}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="10">{tv:g}</text>')
    for zv in _ticks(z0, z1):
        y = sy(zv)
        out.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#eee"/>')
        out.append(f'<text x="{left - 6}" y="{y + 3:.1f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="10">{zv:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{_H - 8}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="11">time (s)</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="11" transform="rotate(-90 14 {top + ph / 2:.1f})">depth (m)</text>')
    for i, (name, (t, z)) in enumerate(series.items()):
        color = _COLORS.get(name, "#7f7f7f")
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t, z))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 12 + 14 * i
        out.append(f'<line x1="{left + pw - 90}" y1="{ly}" x2="{left + pw - 70}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 65}" y="{ly + 4}" font-family="sans-serif" font-size="11">'
                   f"{escape(name)}</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def runlog_svg(log, title: str = "target depth") -> str:
    """Depth vs time per source of a run log, with ground truth from the fused rows."""
    series: dict[str, tuple] = {}
    fused = log.select("fused")
    if fused:
        series["gt"] = ([r.t for r in fused], [r.gt[2] for r in fused])
    for src in ("network", "pnp", "fused"):
        rows = log.select(src)
        if rows:
            series[src] = ([r.t for r in rows], [r.est[2] for r in rows])
    return depth_chart_svg(series, title)
