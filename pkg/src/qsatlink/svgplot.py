"""Minimal SVG line charts for pass reports."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _range(values):
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def line_chart(path: str | Path, x, series: dict[str, list[float]], title: str,
               x_label: str, y_label: str) -> None:
    """Write one chart with a shared x axis and one polyline per series."""
    x = list(x)
    x_lo, x_hi = _range(x)
    y_lo, y_hi = _range([v for ys in series.values() for v in ys])
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(v):
        return MARGIN + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">'
           f'{escape(title)}</text>',
           f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
           f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
           f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" '
           f'stroke="black"/>',
           f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle" font-size="12">'
           f'{escape(x_label)}</text>',
           f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 15 {HEIGHT / 2})">{escape(y_label)}</text>']
    for i in range(5):
        xv = x_lo + (x_hi - x_lo) * i / 4
        yv = y_lo + (y_hi - y_lo) * i / 4
        out.append(f'<text x="{px(xv):.1f}" y="{HEIGHT - MARGIN + 16}" '
                   f'text-anchor="middle" font-size="10">{xv:.4g}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{py(yv) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{yv:.4g}</text>')
    for k, (name, ys) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, ys)
                       if math.isfinite(a) and math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{pts}"/>')
        out.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 14 * k}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
