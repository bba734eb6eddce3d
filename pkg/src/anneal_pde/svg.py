"""Minimal static SVG output: heatmaps for 2-D fields, line plots for 1-D."""
from __future__ import annotations

import numpy as np

_NEG = (33, 102, 172)
_MID = (247, 247, 247)
_POS = (178, 24, 43)


def _lerp(a, b, t):
    return tuple(int(round(x + (y - x) * t)) for x, y in zip(a, b))


def _color(value: float, lo: float, hi: float) -> str:
    """Diverging map centred on zero when the range straddles it, else sequential."""
    if hi <= lo:
        rgb = _MID
    elif lo < 0.0 < hi:
        m = max(-lo, hi)
        t = value / m
        rgb = _lerp(_MID, _POS, t) if t >= 0 else _lerp(_MID, _NEG, -t)
    else:
        t = (value - lo) / (hi - lo)
        rgb = _lerp(_MID, _POS if hi > 0 else _NEG, t if hi > 0 else 1.0 - t)
    return "#%02x%02x%02x" % rgb


def heatmap(field, title: str = "", cell: int = 24) -> str:
    """``field[j, i]`` drawn with ``j = 0`` at the bottom."""
    f = np.asarray(field, dtype=float)
    ny, nx = f.shape
    lo, hi = float(f.min()), float(f.max())
    margin, top = 10, 30
    width = nx * cell + 2 * margin
    height = ny * cell + top + 40
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{margin}" y="20" font-family="sans-serif" font-size="14">{_esc(title)}</text>']
    for j in range(ny):
        y = top + (ny - 1 - j) * cell
        for i in range(nx):
            x = margin + i * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_color(f[j, i], lo, hi)}"/>')
    jmin, imin = np.unravel_index(int(np.argmin(f)), f.shape)
    jmax, imax = np.unravel_index(int(np.argmax(f)), f.shape)
    for (j, i), mark in (((jmin, imin), "min"), ((jmax, imax), "max")):
        cx = margin + i * cell + cell / 2
        cy = top + (ny - 1 - j) * cell + cell / 2
        out.append(f'<circle cx="{cx}" cy="{cy}" r="{cell / 5}" fill="none" stroke="black"/>')
    ty = top + ny * cell + 18
    out.append(f'<text x="{margin}" y="{ty}" font-family="sans-serif" font-size="12">'
               f'min {lo:.6g} at (i={imin}, j={jmin})   max {hi:.6g} at (i={imax}, j={jmax})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_plot(x, y, title: str = "", width: int = 480, height: int = 320) -> str:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    left, right, top, bottom = 60, 20, 30, 40
    pw, ph = width - left - right, height - top - bottom
    xlo, xhi = float(x.min()), float(x.max())
    ylo, yhi = float(y.min()), float(y.max())
    if xhi <= xlo:
        xhi = xlo + 1.0
    if yhi <= ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5

    def px(v):
        return left + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        return top + ph - (v - ylo) / (yhi - ylo) * ph

    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left}" y="20" font-family="sans-serif" font-size="14">{_esc(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<polyline points="{pts}" fill="none" stroke="{"#%02x%02x%02x" % _POS}" stroke-width="2"/>',
           f'<text x="{left}" y="{height - 22}" font-family="sans-serif" font-size="11">{xlo:.4g}</text>',
           f'<text x="{left + pw}" y="{height - 22}" font-family="sans-serif" font-size="11" text-anchor="end">{xhi:.4g}</text>',
           f'<text x="{left - 5}" y="{top + ph}" font-family="sans-serif" font-size="11" text-anchor="end">{ylo:.4g}</text>',
           f'<text x="{left - 5}" y="{top + 10}" font-family="sans-serif" font-size="11" text-anchor="end">{yhi:.4g}</text>',
           f'<text x="{left}" y="{height - 6}" font-family="sans-serif" font-size="12">'
           f'min {float(y.min()):.6g}   max {float(y.max()):.6g}</text>',
           "</svg>"]
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
