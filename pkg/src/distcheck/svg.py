"""Minimal SVG charts written as plain text (no plotting dependency)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _axes(title, x_label, y_label):
    x1, y1 = WIDTH - RIGHT, HEIGHT - BOTTOM
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{y1}" stroke="black"/>',
        f'<text x="{(LEFT + x1) / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(x_label)}</text>',
        f'<text x="18" y="{(TOP + y1) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(TOP + y1) / 2})">{escape(y_label)}</text>',
    ]


def _scale(lo, hi, a, b):
    span = hi - lo or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def rate_chart(labels, rates, lows, highs, title="accept rate", target=None) -> str:
    """Bar chart of rates in [0, 1] with interval whiskers."""
    parts = _axes(title, "instance", "accept rate")
    y1 = HEIGHT - BOTTOM
    sy = _scale(0.0, 1.0, y1, TOP)
    slot = (WIDTH - RIGHT - LEFT) / max(len(labels), 1)
    for t in _ticks(0.0, 1.0):
        parts.append(f'<text x="{LEFT - 6}" y="{_fmt(sy(t) + 4)}" text-anchor="end">{t:.2f}</text>')
    if target is not None:
        parts.append(f'<line x1="{LEFT}" y1="{_fmt(sy(target))}" x2="{WIDTH - RIGHT}" '
                     f'y2="{_fmt(sy(target))}" stroke="gray" stroke-dasharray="4 3"/>')
    for i, (lab, r, lo, hi) in enumerate(zip(labels, rates, lows, highs)):
        cx = LEFT + slot * (i + 0.5)
        w = slot * 0.5
        parts.append(f'<rect x="{_fmt(cx - w / 2)}" y="{_fmt(sy(r))}" width="{_fmt(w)}" '
                     f'height="{_fmt(y1 - sy(r))}" fill="#4a7fb5"/>')
        parts.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(sy(lo))}" x2="{_fmt(cx)}" '
                     f'y2="{_fmt(sy(hi))}" stroke="black" stroke-width="2"/>')
        parts.append(f'<text x="{_fmt(cx)}" y="{y1 + 16}" text-anchor="middle" '
                     f'font-size="10">{escape(str(lab))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def loglog_chart(xs, ys, slope=None, intercept=None, title="scaling",
                 x_label="x", y_label="y") -> str:
    """Log-log scatter with an optional fitted line ``log y = slope log x + intercept``."""
    lx = [math.log10(x) for x in xs]
    ly = [math.log10(y) for y in ys]
    if not lx:
        lx, ly = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    pad_x = 0.05 * (x1 - x0 or 1.0)
    pad_y = 0.1 * (y1 - y0 or 1.0)
    sx = _scale(x0 - pad_x, x1 + pad_x, LEFT, WIDTH - RIGHT)
    sy = _scale(y0 - pad_y, y1 + pad_y, HEIGHT - BOTTOM, TOP)
    parts = _axes(title, f"{x_label} (log10)", f"{y_label} (log10)")
    for t in _ticks(x0, x1):
        parts.append(f'<text x="{_fmt(sx(t))}" y="{HEIGHT - BOTTOM + 16}" '
                     f'text-anchor="middle">{t:.2f}</text>')
    for t in _ticks(y0, y1):
        parts.append(f'<text x="{LEFT - 6}" y="{_fmt(sy(t) + 4)}" text-anchor="end">{t:.2f}</text>')
    if slope is not None and intercept is not None:
        # the fit is in natural logs; the slope is base-independent
        b10 = intercept / math.log(10)
        parts.append(f'<line x1="{_fmt(sx(x0))}" y1="{_fmt(sy(slope * x0 + b10))}" '
                     f'x2="{_fmt(sx(x1))}" y2="{_fmt(sy(slope * x1 + b10))}" '
                     f'stroke="#c0392b" stroke-width="1.5"/>')
        parts.append(f'<text x="{WIDTH - RIGHT - 4}" y="{TOP + 14}" text-anchor="end">'
                     f'slope {slope:.3f}</text>')
    for a, b in zip(lx, ly):
        parts.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="4" fill="#4a7fb5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
