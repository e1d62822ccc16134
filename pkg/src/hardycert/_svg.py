"""Minimal static SVG 1.1 line plots (linear or log axes)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

_W, _H = 640, 420
_M = dict(left=70, right=20, top=40, bottom=50)
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _transform(v, log):
    v = np.asarray(v, float)
    if not log:
        return v
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v > 0, np.log10(v), np.nan)


def _ticks(lo, hi, n=5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _fmt(v, log):
    return f"1e{v:.3g}" if log else f"{v:.4g}"


def line_plot(series, *, title="", xlabel="", ylabel="", xlog=False, ylog=False) -> str:
    """`series` is a list of (label, x, y); non-finite or nonpositive (log) points are skipped."""
    pts = []
    for label, x, y in series:
        tx, ty = _transform(x, xlog), _transform(y, ylog)
        ok = np.isfinite(tx) & np.isfinite(ty)
        pts.append((label, tx[ok], ty[ok]))
    allx = np.concatenate([p[1] for p in pts]) if pts else np.array([0.0, 1.0])
    ally = np.concatenate([p[2] for p in pts]) if pts else np.array([0.0, 1.0])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = _W - _M["left"] - _M["right"]
    ph = _H - _M["top"] - _M["bottom"]

    def sx(v):
        return _M["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return _M["top"] + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_M["left"]}" y="{_M["top"]}" width="{pw}" height="{ph}" fill="none" '
        'stroke="black"/>',
        f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle" font-size="13">'
        f'{escape(xlabel)}</text>',
        f'<text x="16" y="{_H / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {_H / 2})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{_M["top"] + ph + 18}" text-anchor="middle" '
                   f'font-size="11">{_fmt(t, xlog)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{_M["left"] - 6}" y="{sy(t) + 4:.1f}" text-anchor="end" '
                   f'font-size="11">{_fmt(t, ylog)}</text>')
    for k, (label, tx, ty) in enumerate(pts):
        color = _COLORS[k % len(_COLORS)]
        if tx.size:
            coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(tx, ty))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{coords}"/>')
        out.append(f'<text x="{_M["left"] + 10}" y="{_M["top"] + 16 + 16 * k}" font-size="12" '
                   f'fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
