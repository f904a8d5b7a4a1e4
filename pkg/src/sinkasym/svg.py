"""Minimal static SVG line plots.

Only what the reports need: axes with a few ticks, polylines, markers and
text.  Coordinates are printed at fixed precision so that identical data
gives byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f4e79", "#b22222", "#2e7d32", "#6a1b9a", "#ef6c00", "#00838f")


def _fmt(v):
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    first = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(first, hi + 0.5 * step, step)]


def _tick_label(v):
    if v == 0:
        return "0"
    if 1e-3 <= abs(v) < 1e4:
        return f"{v:.4g}"
    return f"{v:.1e}"


@dataclass
class Figure:
    """A single panel with linear axes.

    Parameters
    ----------
    title, xlabel, ylabel : str
    width, height : int
        Canvas size in pixels.
    """

    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 480
    _items: list = field(default_factory=list)
    _legend: list = field(default_factory=list)

    def line(self, x, y, color=None, label=None, width=1.5, dash=None):
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        color = color or PALETTE[len(self._legend) % len(PALETTE)]
        self._items.append(("line", x[ok], y[ok], color, width, dash))
        if label:
            self._legend.append((label, color))
        return self

    def points(self, x, y, color=None, label=None, r=2.5):
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        color = color or PALETTE[len(self._legend) % len(PALETTE)]
        self._items.append(("points", x[ok], y[ok], color, r, None))
        if label:
            self._legend.append((label, color))
        return self

    def text(self, x, y, s, color="#000000"):
        self._items.append(("text", x, y, color, s, None))
        return self

    def _limits(self):
        xs = [it[1] for it in self._items if it[0] != "text" and len(it[1])]
        ys = [it[2] for it in self._items if it[0] != "text" and len(it[2])]
        if not xs:
            return (0.0, 1.0), (0.0, 1.0)
        xa, ya = np.concatenate(xs), np.concatenate(ys)
        lims = []
        for a in (xa, ya):
            lo, hi = float(a.min()), float(a.max())
            if hi == lo:
                lo, hi = lo - 0.5, hi + 0.5
            pad = 0.04 * (hi - lo)
            lims.append((lo - pad, hi + pad))
        return lims[0], lims[1]

    def render(self):
        """The SVG document as a string."""
        W, H = self.width, self.height
        left, right, top, bottom = 70, 20, 40, 55
        (x0, x1), (y0, y1) = self._limits()
        pw, ph = W - left - right, H - top - bottom

        def X(v):
            return left + (v - x0) / (x1 - x0) * pw

        def Y(v):
            return top + ph - (v - y0) / (y1 - y0) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
               f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
               f'<rect width="{W}" height="{H}" fill="#ffffff"/>',
               f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" '
               f'stroke="#000000"/>']
        for v in _ticks(x0, x1):
            px = _fmt(X(v))
            out.append(f'<line x1="{px}" y1="{top + ph}" x2="{px}" y2="{top + ph + 5}" '
                       f'stroke="#000000"/>')
            out.append(f'<text x="{px}" y="{top + ph + 18}" text-anchor="middle">'
                       f'{_tick_label(v)}</text>')
        for v in _ticks(y0, y1):
            py = _fmt(Y(v))
            out.append(f'<line x1="{left - 5}" y1="{py}" x2="{left}" y2="{py}" '
                       f'stroke="#000000"/>')
            out.append(f'<text x="{left - 8}" y="{py}" text-anchor="end" '
                       f'dominant-baseline="middle">{_tick_label(v)}</text>')
        out.append(f'<clipPath id="plot"><rect x="{left}" y="{top}" width="{pw}" '
                   f'height="{ph}"/></clipPath><g clip-path="url(#plot)">')
        texts = []
        for kind, a, b, color, w, dash in self._items:
            if kind == "line" and len(a) > 1:
                pts = " ".join(f"{_fmt(X(u))},{_fmt(Y(v))}" for u, v in zip(a, b))
                d = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                           f'stroke-width="{w}"{d}/>')
            elif kind == "points":
                for u, v in zip(a, b):
                    out.append(f'<circle cx="{_fmt(X(u))}" cy="{_fmt(Y(v))}" r="{w}" '
                               f'fill="{color}"/>')
            elif kind == "text":
                texts.append(f'<text x="{_fmt(X(a))}" y="{_fmt(Y(b))}" fill="{color}">'
                             f'{escape(w)}</text>')
        out.append("</g>")
        out.extend(texts)
        for i, (label, color) in enumerate(self._legend):
            yy = top + 14 + 16 * i
            out.append(f'<line x1="{left + 10}" y1="{yy}" x2="{left + 30}" y2="{yy}" '
                       f'stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{left + 36}" y="{yy + 4}">{escape(label)}</text>')
        if self.title:
            out.append(f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" '
                       f'font-size="14">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{left + pw / 2:.1f}" y="{H - 12}" '
                       f'text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
                       f'transform="rotate(-90 16 {top + ph / 2:.1f})">'
                       f'{escape(self.ylabel)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())
