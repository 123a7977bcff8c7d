"""Minimal self-contained SVG charts.

Output depends only on the inputs (no timestamps, no random ids), so the same
data always yields byte-identical files.
"""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    return np.linspace(lo, hi, n)


class _Frame:
    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        if y_hi <= y_lo:
            y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        self.x_lo, self.x_hi, self.y_lo, self.y_hi = x_lo, x_hi, y_lo, y_hi
        self.pw = WIDTH - MARGIN_L - MARGIN_R
        self.ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(self, x):
        return MARGIN_L + (x - self.x_lo) / (self.x_hi - self.x_lo) * self.pw

    def py(self, y):
        return MARGIN_T + (1 - (y - self.y_lo) / (self.y_hi - self.y_lo)) * self.ph


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def _axes(fr: _Frame, y_label: str, x_ticks: Sequence[tuple[float, str]]) -> list[str]:
    out = [
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{fr.pw}" height="{fr.ph}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    ]
    for y in _ticks(fr.y_lo, fr.y_hi):
        py = _f(fr.py(y))
        out.append(f'<line x1="{MARGIN_L - 4}" y1="{py}" x2="{MARGIN_L}" y2="{py}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{py}" text-anchor="end" dy="4">{y:.3g}</text>')
    base = MARGIN_T + fr.ph
    for x, label in x_ticks:
        px = _f(fr.px(x))
        out.append(f'<line x1="{px}" y1="{base}" x2="{px}" y2="{base + 4}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{base + 16}" text-anchor="middle">{escape(label)}</text>')
    out.append(
        f'<text x="14" y="{MARGIN_T + fr.ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {MARGIN_T + fr.ph / 2:.0f})">{escape(y_label)}</text>'
    )
    return out


def line_chart(
    series: Mapping[str, Sequence[float]],
    x_labels: Sequence[str] | None = None,
    title: str = "",
    y_label: str = "speed [km/h]",
) -> str:
    """Overlayed line chart; every series shares the x positions 0..n-1."""
    arrays = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    n = max((len(v) for v in arrays.values()), default=0)
    finite = np.concatenate([v[np.isfinite(v)] for v in arrays.values()] or [np.zeros(1)])
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    pad = 0.05 * (y_hi - y_lo)
    fr = _Frame(0, max(n - 1, 1), y_lo - pad, y_hi + pad)

    ticks = []
    if x_labels:
        idx = np.unique(np.linspace(0, len(x_labels) - 1, min(7, len(x_labels))).round().astype(int))
        ticks = [(float(i), x_labels[i]) for i in idx]
    out = _header(title) + _axes(fr, y_label, ticks)
    for j, (name, v) in enumerate(arrays.items()):
        pts = " ".join(f"{_f(fr.px(i))},{_f(fr.py(y))}" for i, y in enumerate(v) if np.isfinite(y))
        color = COLORS[j % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN_T + 14 + 14 * j
        out.append(f'<line x1="{WIDTH - 150}" y1="{ly}" x2="{WIDTH - 130}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - 125}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def stem_plot(
    values: Sequence[float],
    boundaries: Sequence[int] = (),
    block_labels: Sequence[str] = (),
    title: str = "",
    y_label: str = "coefficient",
) -> str:
    """Stem plot of a coefficient vector with dashed separators between blocks.

    ``boundaries`` are block start offsets (the first, 0, may be included).
    """
    v = np.asarray(values, dtype=float)
    lo, hi = min(0.0, float(v.min(initial=0.0))), max(0.0, float(v.max(initial=0.0)))
    pad = 0.1 * (hi - lo) if hi > lo else 1.0
    fr = _Frame(-1, max(len(v), 1), lo - pad, hi + pad)
    out = _header(title) + _axes(fr, y_label, [])
    zero = _f(fr.py(0.0))
    out.append(f'<line x1="{MARGIN_L}" y1="{zero}" x2="{WIDTH - MARGIN_R}" y2="{zero}" stroke="#888"/>')
    starts = [int(b) for b in boundaries]
    for b in starts:
        if b <= 0:
            continue
        px = _f(fr.px(b - 0.5))
        out.append(
            f'<line x1="{px}" y1="{MARGIN_T}" x2="{px}" y2="{MARGIN_T + fr.ph}" '
            f'stroke="black" stroke-dasharray="5,4"/>'
        )
    ends = starts[1:] + [len(v)]
    for label, s, e in zip(block_labels, starts, ends):
        cx = _f(fr.px((s + e - 1) / 2))
        out.append(f'<text x="{cx}" y="{MARGIN_T + fr.ph + 16}" text-anchor="middle">{escape(label)}</text>')
    for i, y in enumerate(v):
        if y == 0:
            continue
        px, py = _f(fr.px(i)), _f(fr.py(y))
        out.append(f'<line x1="{px}" y1="{zero}" x2="{px}" y2="{py}" stroke="{COLORS[0]}" stroke-width="1.5"/>')
        out.append(f'<circle cx="{px}" cy="{py}" r="3" fill="{COLORS[0]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
