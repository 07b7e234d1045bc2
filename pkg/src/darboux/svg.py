"""Minimal SVG line plots: one axes box, polylines, a legend. No plotting dependency."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import PreconditionError
from .field import ComplexField, require_same_grid

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=50)
COLORS = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910")
DASHES = ("", "6,4", "2,3", "10,3,2,3")
MAX_POINTS = 1500


@dataclass(frozen=True)
class Series:
    label: str
    field: ComplexField
    component: str = "re"

    def data(self) -> np.ndarray:
        v = self.field.values
        if self.component == "re":
            return v.real
        if self.component == "im":
            return v.imag
        if self.component == "abs":
            return np.abs(v)
        raise PreconditionError(f"unknown component {self.component!r}")


@dataclass(frozen=True)
class PlotSpec:
    series: list
    xlabel: str = "x"
    ylabel: str = ""
    title: str = ""
    path: Path | str = "plot.svg"
    notes: list = field(default_factory=list)


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    span = hi - lo
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def _fmt(v: float) -> str:
    return f"{v:.4g}" if v != 0 else "0"


def render(spec: PlotSpec) -> str:
    """SVG document for ``spec`` as a string (deterministic for equal inputs)."""
    if not spec.series:
        raise PreconditionError("a plot needs at least one series")
    require_same_grid(*[s.field for s in spec.series])
    x = spec.series[0].field.x
    ys = [s.data() for s in spec.series]
    stride = max(1, -(-len(x) // MAX_POINTS))
    x_lo, x_hi = float(x[0]), float(x[-1])
    finite = np.concatenate([y[np.isfinite(y)] for y in ys])
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if len(finite) else (-1.0, 1.0)
    if y_hi - y_lo < 1e-12 * max(1.0, abs(y_hi)):
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return MARGIN["top"] + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    if spec.title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(spec.title)}</text>')
    for t in _ticks(x_lo, x_hi):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        Y = py(t)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{MARGIN["left"]}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    if y_lo < 0 < y_hi:
        out.append(
            f'<line x1="{MARGIN["left"]}" y1="{py(0):.2f}" x2="{MARGIN["left"] + pw}" y2="{py(0):.2f}" '
            'stroke="#999" stroke-width="0.5"/>'
        )
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(spec.xlabel)}</text>')
    out.append(
        f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(spec.ylabel)}</text>'
    )
    for i, (s, y) in enumerate(zip(spec.series, ys)):
        color = COLORS[i % len(COLORS)]
        dash = DASHES[i % len(DASHES)]
        pts = " ".join(
            f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[::stride], y[::stride]) if np.isfinite(b)
        )
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="1.3"{dash_attr} points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 16 * i
        lx = MARGIN["left"] + pw - 170
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" stroke="{color}"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly}">{escape(s.label)}</text>')
    for j, note in enumerate(spec.notes):
        out.append(f'<text x="{MARGIN["left"] + 8}" y="{MARGIN["top"] + 16 + 15 * j}" font-size="11">{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plot(spec: PlotSpec) -> Path:
    path = Path(spec.path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(spec))
    return path
