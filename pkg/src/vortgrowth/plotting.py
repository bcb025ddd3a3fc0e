"""Minimal deterministic SVG line charts of CSV series.

The plot area maps data linearly (or log10 in y) onto pixels; the mapping
is written into ``data-*`` attributes of the plot group so rendered
polylines can be read back into data coordinates.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError
from .io import read_csv

WIDTH, HEIGHT = 640, 400
MARGIN = 60
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]


def _num(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".") or "0"


def _ticks(lo: float, hi: float, n: int = 5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_svg(x, series: dict, log_y: bool = False, xlabel: str = "t", title: str = "") -> str:
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    if log_y:
        for k, v in ys.items():
            with np.errstate(divide="ignore", invalid="ignore"):
                ys[k] = np.where(v > 0, np.log10(np.where(v > 0, v, 1.0)), np.nan)
    finite = np.concatenate([v[np.isfinite(v)] for v in ys.values()] + [np.zeros(0)])
    xf = x[np.isfinite(x)]
    if xf.size == 0 or finite.size == 0:
        raise ConfigError("nothing finite to plot")
    x0, x1 = float(xf.min()), float(xf.max())
    y0, y1 = float(finite.min()), float(finite.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    sx = pw / (x1 - x0)
    sy = ph / (y1 - y0)

    def px(a):
        return MARGIN + (a - x0) * sx

    def py(b):
        return HEIGHT - MARGIN - (b - y0) * sy

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-size="14">{title}</text>')
    out.append(f'<g id="plot" data-x0="{x0!r}" data-y0="{y0!r}" data-xscale="{sx!r}" '
               f'data-yscale="{sy!r}" data-left="{MARGIN}" data-bottom="{HEIGHT - MARGIN}" '
               f'data-logy="{int(log_y)}">')
    out.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" '
               'stroke="black"/>')
    for tv in _ticks(x0, x1):
        out.append(f'<text x="{_num(px(tv))}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle" '
                   f'font-size="11">{tv:.3g}</text>')
    for tv in _ticks(y0, y1):
        lab = f"1e{tv:.2g}" if log_y else f"{tv:.3g}"
        out.append(f'<text x="{MARGIN - 6}" y="{_num(py(tv) + 4)}" text-anchor="end" '
                   f'font-size="11">{lab}</text>')
    out.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 16}" text-anchor="middle" '
               f'font-size="12">{xlabel}</text>')
    for idx, (name, v) in enumerate(ys.items()):
        ok = np.isfinite(v) & np.isfinite(x)
        pts = " ".join(f"{_num(px(a))},{_num(py(b))}" for a, b in zip(x[ok], v[ok]))
        color = COLORS[idx % len(COLORS)]
        out.append(f'<polyline data-series="{name}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 16 * (idx + 1)}" '
                   f'text-anchor="end" font-size="11" fill="{color}">{name}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_path, columns, out_path, x: str = "t", log_y: bool = False,
              title: str = "") -> Path:
    data = read_csv(csv_path)
    cols = [columns] if isinstance(columns, str) else list(columns)
    missing = [c for c in cols + [x] if c not in data]
    if missing:
        raise ConfigError(f"missing columns {missing} in {csv_path}")
    svg = render_svg(data[x], {c: data[c] for c in cols}, log_y, x, title)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    return out


def read_polyline(svg: str, series: str):
    """Recover data coordinates of one rendered series (inverse of the plot mapping)."""
    import re
    g = re.search(r'<g id="plot" ([^>]*)>', svg).group(1)
    attrs = dict(re.findall(r'data-(\w+)="([^"]*)"', g))
    m = re.search(rf'<polyline data-series="{re.escape(series)}"[^>]*points="([^"]*)"', svg)
    pts = np.array([[float(a) for a in p.split(",")] for p in m.group(1).split()]) \
        if m and m.group(1) else np.zeros((0, 2))
    xs = float(attrs["x0"]) + (pts[:, 0] - float(attrs["left"])) / float(attrs["xscale"])
    ys = float(attrs["y0"]) + (float(attrs["bottom"]) - pts[:, 1]) / float(attrs["yscale"])
    return xs, ys
