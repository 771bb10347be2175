"""Minimal standalone SVG line plots (no plotting library needed)."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .core import InvalidArgumentError

__all__ = ["emit_svg_plot"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]
W, H = 640, 420
ML, MR, MT, MB = 70, 170, 30, 55


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        return [float(k) for k in range(a, b + 1)]
    if hi == lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / 4))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    return [first + k * step for k in range(int((hi - first) / step + 1e-9) + 1)]


def _fmt(v: float, log: bool) -> str:
    return f"1e{int(v)}" if log else f"{v:g}"


def emit_svg_plot(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    path,
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    title: str = "",
) -> Path:
    """Write one polyline per named ``(x, y)`` series to ``path``."""
    if not series:
        raise InvalidArgumentError("no series to plot")
    pts = {}
    for name, (xs, ys) in series.items():
        xs, ys = list(map(float, xs)), list(map(float, ys))
        if not xs or len(xs) != len(ys):
            raise InvalidArgumentError(f"series {name!r} is empty or has mismatched lengths")
        if logx and min(xs) <= 0:
            raise InvalidArgumentError(f"series {name!r} has non-positive x on a log axis")
        if logy and min(ys) <= 0:
            raise InvalidArgumentError(f"series {name!r} has non-positive y on a log axis")
        tx = [math.log10(v) for v in xs] if logx else xs
        ty = [math.log10(v) for v in ys] if logy else ys
        pts[name] = (tx, ty)

    allx = [v for tx, _ in pts.values() for v in tx]
    ally = [v for _, ty in pts.values() for v in ty]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = W - ML - MR, H - MT - MB

    def sx(v):
        return ML + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MT + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{ML + pw / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for v in _ticks(x0, x1, logx):
        if x0 - 1e-9 <= v <= x1 + 1e-9:
            X = sx(v)
            out.append(f'<line x1="{X:.1f}" y1="{MT + ph}" x2="{X:.1f}" y2="{MT + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X:.1f}" y="{MT + ph + 18}" text-anchor="middle">{_fmt(v, logx)}</text>')
    for v in _ticks(y0, y1, logy):
        if y0 - 1e-9 <= v <= y1 + 1e-9:
            Y = sy(v)
            out.append(f'<line x1="{ML - 5}" y1="{Y:.1f}" x2="{ML}" y2="{Y:.1f}" stroke="black"/>')
            out.append(f'<text x="{ML - 8}" y="{Y + 4:.1f}" text-anchor="end">{_fmt(v, logy)}</text>')
    out.append(f'<text x="{ML + pw / 2:.1f}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{MT + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 16 {MT + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for k, (name, (tx, ty)) in enumerate(pts.items()):
        color = _COLORS[k % len(_COLORS)]
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(tx, ty))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{coords}"/>')
        ly = MT + 14 + 16 * k
        out.append(f'<rect x="{W - MR + 12}" y="{ly - 8}" width="14" height="3" fill="{color}"/>')
        out.append(f'<text x="{W - MR + 32}" y="{ly - 3}">{escape(name)}</text>')
    out.append("</svg>")
    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc
    return path
