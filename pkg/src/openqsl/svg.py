"""Minimal SVG rendering for experiment plots (scatter and heatmaps)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 480, 360
MARGIN = 56


def _finite(values):
    return [v for v in values if v is not None and math.isfinite(v)]


def _span(values):
    vals = _finite(values)
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def _axes(x0, y0, w, h, xr, yr, xlabel, ylabel, title) -> list[str]:
    out = [
        f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="black"/>',
        f'<text x="{x0 + w / 2}" y="{y0 + h + 36}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="{x0 - 42}" y="{y0 + h / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 {x0 - 42} {y0 + h / 2})">{escape(ylabel)}</text>',
        f'<text x="{x0 + w / 2}" y="{y0 - 10}" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = xr[0] + frac * (xr[1] - xr[0])
        yv = yr[0] + frac * (yr[1] - yr[0])
        out.append(f'<text x="{x0 + frac * w}" y="{y0 + h + 16}" text-anchor="middle" font-size="10">{xv:.3g}</text>')
        out.append(f'<text x="{x0 - 4}" y="{y0 + h - frac * h + 3}" text-anchor="end" font-size="10">{yv:.3g}</text>')
    return out


def _wrap(body: list[str], width: int = WIDTH, height: int = HEIGHT) -> str:
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def scatter(x, y, xlabel="", ylabel="", title="") -> str:
    xr, yr = _span(x), _span(y)
    x0, y0 = MARGIN, 30
    w, h = WIDTH - MARGIN - 20, HEIGHT - 30 - MARGIN
    body = _axes(x0, y0, w, h, xr, yr, xlabel, ylabel, title)
    if yr[0] < 0 < yr[1]:
        zy = y0 + h - (0 - yr[0]) / (yr[1] - yr[0]) * h
        body.append(f'<line x1="{x0}" y1="{zy:.2f}" x2="{x0 + w}" y2="{zy:.2f}" stroke="gray" stroke-dasharray="4 3"/>')
    for xv, yv in zip(x, y):
        if not (math.isfinite(xv) and math.isfinite(yv)):
            continue
        px = x0 + (xv - xr[0]) / (xr[1] - xr[0]) * w
        py = y0 + h - (yv - yr[0]) / (yr[1] - yr[0]) * h
        color = "#c0392b" if yv >= 0 else "#2471a3"
        body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="1.8" fill="{color}"/>')
    return _wrap(body)


def _color(v, lo, hi) -> str:
    if v is None or not math.isfinite(v):
        return "#dddddd"
    f = 0.0 if hi == lo else (v - lo) / (hi - lo)
    f = min(1.0, max(0.0, f))
    r = int(40 + 215 * f)
    g = int(60 + 120 * (1 - abs(2 * f - 1)))
    b = int(255 - 215 * f)
    return f"#{r:02x}{g:02x}{b:02x}"


def _heatmap_body(x, y, z, x0, y0, w, h, lo, hi, xlabel, ylabel, title) -> list[str]:
    body = _axes(x0, y0, w, h, _span(x), _span(y), xlabel, ylabel, title)
    cw, ch = w / max(len(x), 1), h / max(len(y), 1)
    for i, row in enumerate(z):
        for j, v in enumerate(row):
            px, py = x0 + j * cw, y0 + h - (i + 1) * ch
            body.append(
                f'<rect x="{px:.2f}" y="{py:.2f}" width="{cw + 0.3:.2f}" height="{ch + 0.3:.2f}" fill="{_color(v, lo, hi)}"/>'
            )
    body.append(f'<text x="{x0 + w}" y="{y0 + h + 48}" text-anchor="end" font-size="10">range [{lo:.6g}, {hi:.6g}]</text>')
    return body


def heatmap(x, y, z, xlabel="", ylabel="", title="") -> str:
    """Rows of ``z`` follow ``y``; columns follow ``x``."""
    lo, hi = _span([v for row in z for v in row])
    body = _heatmap_body(x, y, z, MARGIN, 30, WIDTH - MARGIN - 20, HEIGHT - 30 - MARGIN - 12, lo, hi, xlabel, ylabel, title)
    return _wrap(body)


def dual_heatmap(x, y, zs, titles, xlabel="", ylabel="", title="") -> str:
    lo, hi = _span([v for z in zs for row in z for v in row])
    width = 2 * WIDTH
    body = [f'<text x="{width / 2}" y="14" text-anchor="middle" font-size="13">{escape(title)}</text>']
    for k, (z, sub) in enumerate(zip(zs, titles)):
        body += _heatmap_body(
            x, y, z, k * WIDTH + MARGIN, 40, WIDTH - MARGIN - 20, HEIGHT - 40 - MARGIN - 12, lo, hi, xlabel, ylabel, sub
        )
    return _wrap(body, width=width)


def render(plot: dict) -> str:
    kind = plot["kind"]
    if kind == "scatter":
        return scatter(plot["x"], plot["y"], plot.get("xlabel", ""), plot.get("ylabel", ""), plot.get("title", ""))
    if kind == "heatmap":
        return heatmap(plot["x"], plot["y"], plot["z"], plot.get("xlabel", ""), plot.get("ylabel", ""), plot.get("title", ""))
    if kind == "dual-heatmap":
        return dual_heatmap(
            plot["x"], plot["y"], plot["z"], plot["titles"], plot.get("xlabel", ""), plot.get("ylabel", ""), plot.get("title", "")
        )
    raise ValueError(f"unknown plot kind {kind!r}")
