"""Minimal static SVG output: line plots and lattice heatmaps.

Self-contained XML with no external references; float formatting is fixed
so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["line_plot", "heatmap_panels"]

_PALETTE = ["#1b6ca8", "#d1495b", "#66a182", "#edae49", "#8d5a97", "#2e4057"]


def _f(x: float) -> str:
    return f"{x:.3f}"


def _axis_ticks(lo: float, hi: float, n: int = 5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = np.linspace(lo, hi, n)
    return [float(v) for v in raw]


def line_plot(path, series: dict, xlabel: str, ylabel: str, title: str,
              anchor: tuple | None = None, width: int = 760, height: int = 520):
    """Write a polyline plot; ``series`` maps label -> (x, y) arrays.

    NaN y-values break the polyline. ``anchor`` draws a filled marker.
    """
    margin = 70
    xs = np.concatenate([np.asarray(x, dtype=float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, y in series.values()])
    ys = ys[np.isfinite(ys)]
    if anchor is not None:
        ys = np.append(ys, anchor[1])
    x_lo, x_hi = float(np.min(xs)), float(np.max(xs))
    y_lo, y_hi = (float(np.min(ys)), float(np.max(ys))) if ys.size else (0.0, 1.0)
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return margin + (v - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="28" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]
    ax_color = "#333333"
    parts.append(f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
                 f'y2="{height - margin}" stroke="{ax_color}"/>')
    parts.append(f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
                 f'y2="{height - margin}" stroke="{ax_color}"/>')
    for tv in _axis_ticks(x_lo, x_hi):
        parts.append(f'<line x1="{_f(sx(tv))}" y1="{height - margin}" '
                     f'x2="{_f(sx(tv))}" y2="{height - margin + 6}" stroke="{ax_color}"/>')
        parts.append(f'<text x="{_f(sx(tv))}" y="{height - margin + 22}" '
                     f'text-anchor="middle" font-family="sans-serif" font-size="12">'
                     f'{tv:.3g}</text>')
    for tv in _axis_ticks(y_lo, y_hi):
        parts.append(f'<line x1="{margin - 6}" y1="{_f(sy(tv))}" x2="{margin}" '
                     f'y2="{_f(sy(tv))}" stroke="{ax_color}"/>')
        parts.append(f'<text x="{margin - 10}" y="{_f(sy(tv) + 4)}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="12">{tv:.3g}</text>')
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 16}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    parts.append(f'<text x="20" y="{height / 2:.0f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 20 {height / 2:.0f})">{ylabel}</text>')

    for i, (label, (x, y)) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        segments, cur = [], []
        for xi, yi in zip(x, y):
            if math.isfinite(yi):
                cur.append(f"{_f(sx(xi))},{_f(sy(yi))}")
            elif cur:
                segments.append(cur)
                cur = []
        if cur:
            segments.append(cur)
        for seg in segments:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" '
                         f'points="{" ".join(seg)}"/>')
        ly = margin + 18 * (i + 1)
        parts.append(f'<line x1="{width - margin - 140}" y1="{ly - 4}" '
                     f'x2="{width - margin - 110}" y2="{ly - 4}" stroke="{color}" '
                     f'stroke-width="2"/>')
        parts.append(f'<text x="{width - margin - 104}" y="{ly}" '
                     f'font-family="sans-serif" font-size="12">{label}</text>')
    if anchor is not None:
        parts.append(f'<circle cx="{_f(sx(anchor[0]))}" cy="{_f(sy(anchor[1]))}" r="5" '
                     f'fill="#111111"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _color_scale(v: float) -> str:
    """Diverging blue-white-red for v in [-1, 1]; clipped outside."""
    v = max(-1.0, min(1.0, v))
    if v < 0:
        t = 1.0 + v
        r, g, b = int(43 + t * (255 - 43)), int(102 + t * (255 - 102)), 255
    else:
        t = 1.0 - v
        r, g, b = 255, int(60 + t * (255 - 60)), int(60 + t * (255 - 60))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_panels(path, panels: list, xlabel: str, ylabel: str,
                   cell: int = 7, scale: float | None = None):
    """Grid of lattice heat panels.

    Each panel is (title, g1, g2, values) with values shaped (len(g1),
    len(g2)); NaN cells stay uncolored (blank). Values are mapped on a
    symmetric diverging scale around 0.
    """
    margin = 54
    gap = 36
    n1 = panels[0][3].shape[0]
    n2 = panels[0][3].shape[1]
    pw = n1 * cell
    ph = n2 * cell
    width = margin * 2 + len(panels) * pw + (len(panels) - 1) * gap
    height = margin * 2 + ph + 30
    finite = np.concatenate([p[3][np.isfinite(p[3])].ravel() for p in panels])
    vmax = scale if scale is not None else (float(np.max(np.abs(finite))) if finite.size else 1.0)
    vmax = vmax if vmax > 0 else 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for pi, (title, g1, g2, values) in enumerate(panels):
        x0 = margin + pi * (pw + gap)
        y0 = margin
        parts.append(f'<text x="{x0 + pw / 2:.0f}" y="{y0 - 12}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13">{title}</text>')
        for i in range(values.shape[0]):
            for j in range(values.shape[1]):
                v = values[i, j]
                if not math.isfinite(v):
                    continue
                color = _color_scale(v / vmax)
                cx = x0 + i * cell
                cy = y0 + ph - (j + 1) * cell
                parts.append(f'<rect x="{cx}" y="{cy}" width="{cell}" '
                             f'height="{cell}" fill="{color}"/>')
        parts.append(f'<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" '
                     f'fill="none" stroke="#333333"/>')
        parts.append(f'<text x="{x0}" y="{y0 + ph + 16}" font-family="sans-serif" '
                     f'font-size="11">{g1[0]:.2g}</text>')
        parts.append(f'<text x="{x0 + pw}" y="{y0 + ph + 16}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{g1[-1]:.2g}</text>')
        parts.append(f'<text x="{x0 - 4}" y="{y0 + ph}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{g2[0]:.2g}</text>')
        parts.append(f'<text x="{x0 - 4}" y="{y0 + 10}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{g2[-1]:.2g}</text>')
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">{xlabel}</text>')
    parts.append(f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 14 {height / 2:.0f})">{ylabel}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
