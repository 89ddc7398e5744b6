"""Minimal static SVG line plots, no plotting dependencies.

Axis ranges are auto-scaled with a percentile clip so a single pole or
blowup cannot flatten every other curve into a line.
"""

from __future__ import annotations

import numpy as np

__all__ = ["line_plot"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 36, 52
_COLORS = ("#1f6fb2", "#c14a09", "#2e8b57", "#8b2ea0", "#b8860b", "#555555")


def _axis_range(arrays, clip_percentile=99.0):
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    vals = vals[np.isfinite(vals)]
    if len(vals) == 0:
        return -1.0, 1.0
    lo = float(np.percentile(vals, 100.0 - clip_percentile))
    hi = float(np.percentile(vals, clip_percentile))
    if hi <= lo:
        lo, hi = lo - 0.5, lo + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo, hi, n=6):
    span = hi - lo
    step = 10.0 ** np.floor(np.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = np.ceil(lo / step) * step
    return np.arange(first, hi + 0.5 * step, step)


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:g}"


def line_plot(path, series, title="", xlabel="", ylabel="", clip_percentile=99.0):
    """Write an SVG with one polyline per (x, y, label) triple in ``series``."""
    xs = [np.asarray(s[0], dtype=float) for s in series]
    ys = [np.asarray(s[1], dtype=float) for s in series]
    labels = [s[2] for s in series]
    x_lo, x_hi = _axis_range(xs, 100.0)
    y_lo, y_hi = _axis_range(ys, clip_percentile)

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    # axes box and ticks
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        f'fill="none" stroke="#333" stroke-width="1"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{sx(tx):.1f}" y1="{_H - _MB}" x2="{sx(tx):.1f}" '
            f'y2="{_H - _MB + 5}" stroke="#333"/>'
            f'<text x="{sx(tx):.1f}" y="{_H - _MB + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{_ML - 5}" y1="{sy(ty):.1f}" x2="{_ML}" y2="{sy(ty):.1f}" '
            f'stroke="#333"/>'
            f'<text x="{_ML - 8}" y="{sy(ty):.1f}" text-anchor="end" dy="4" '
            f'font-family="sans-serif" font-size="11">{_fmt(ty)}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.0f})">{ylabel}</text>'
    )
    # curves (clipped values break the polyline rather than distort the scale)
    for k, (x, y, label) in enumerate(zip(xs, ys, labels)):
        color = _COLORS[k % len(_COLORS)]
        pts = []
        segs = []
        for xi, yi in zip(x, y):
            if np.isfinite(xi) and np.isfinite(yi) and y_lo <= yi <= y_hi:
                pts.append(f"{sx(xi):.2f},{sy(yi):.2f}")
            elif pts:
                segs.append(pts)
                pts = []
        if pts:
            segs.append(pts)
        for seg in segs:
            if len(seg) > 1:
                parts.append(
                    f'<polyline points="{" ".join(seg)}" fill="none" '
                    f'stroke="{color}" stroke-width="1.6"/>'
                )
        ly = _MT + 16 + 16 * k
        parts.append(
            f'<line x1="{_W - _MR - 130}" y1="{ly - 4}" x2="{_W - _MR - 106}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
            f'<text x="{_W - _MR - 100}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
