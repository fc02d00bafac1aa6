"""Minimal static SVG line plots and heatmaps (no plotting dependency)."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]
W, H = 640, 420
ML, MR, MT, MB = 70, 20, 40, 50


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi, timestamp=None):
    pw, ph = W - ML - MR, H - MT - MB
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
             f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
             f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
             f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
             f'<text x="{ML + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>',
             f'<text x="16" y="{MT + ph / 2}" text-anchor="middle" transform="rotate(-90 16 {MT + ph / 2})">{escape(ylabel)}</text>']
    for x in _ticks(xlo, xhi):
        px = ML + (x - xlo) / (xhi - xlo) * pw
        parts.append(f'<text x="{px:.1f}" y="{MT + ph + 16}" text-anchor="middle">{x:.3g}</text>')
    for y in _ticks(ylo, yhi):
        py = MT + ph - (y - ylo) / (yhi - ylo) * ph
        parts.append(f'<text x="{ML - 6}" y="{py + 4:.1f}" text-anchor="end">{y:.3g}</text>')
    if timestamp:
        parts.append(f'<text x="{W - 4}" y="{H - 4}" text-anchor="end" font-size="8">{escape(timestamp)}</text>')
    return parts


def _span(lo, hi):
    if not np.isfinite(lo) or not np.isfinite(hi):
        return 0.0, 1.0
    if hi - lo < 1e-300:
        pad = max(abs(lo), 1.0) * 0.5
        return lo - pad, hi + pad
    return lo, hi


def line_plot(series, title="", xlabel="", ylabel="", timestamp=None) -> str:
    """``series`` is a list of ``(x, y, label)`` tuples."""
    xs = np.concatenate([np.asarray(s[0], dtype=float) for s in series]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(s[1], dtype=float) for s in series]) if series else np.zeros(1)
    xlo, xhi = _span(np.nanmin(xs), np.nanmax(xs))
    ylo, yhi = _span(np.nanmin(ys), np.nanmax(ys))
    parts = _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi, timestamp)
    pw, ph = W - ML - MR, H - MT - MB
    for i, (x, y, label) in enumerate(series):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        px = ML + (x[keep] - xlo) / (xhi - xlo) * pw
        py = MT + ph - (y[keep] - ylo) / (yhi - ylo) * ph
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = PALETTE[i % len(PALETTE)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        if label and i < 12:
            parts.append(f'<text x="{ML + 8}" y="{MT + 14 + 13 * i}" fill="{color}">{escape(str(label))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def heatmap(values, extent, title="", xlabel="x0", ylabel="x1", timestamp=None) -> str:
    """Grey-scale heatmap of a 2D array indexed ``[i0, i1]`` over ``extent=(x0lo, x0hi, x1lo, x1hi)``."""
    v = np.asarray(values, dtype=float)
    step = max(1, max(v.shape) // 128)
    v = v[::step, ::step]
    lo, hi = _span(np.nanmin(v), np.nanmax(v))
    parts = _frame(title, xlabel, ylabel, *extent, timestamp)
    pw, ph = W - ML - MR, H - MT - MB
    cw, ch = pw / v.shape[0], ph / v.shape[1]
    for i in range(v.shape[0]):
        for j in range(v.shape[1]):
            s = 0.0 if not np.isfinite(v[i, j]) else (v[i, j] - lo) / (hi - lo)
            g = int(round(255 * (1 - s)))
            parts.append(f'<rect x="{ML + i * cw:.2f}" y="{MT + ph - (j + 1) * ch:.2f}" width="{cw + 0.3:.2f}" '
                         f'height="{ch + 0.3:.2f}" fill="rgb({g},{g},{g})"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
