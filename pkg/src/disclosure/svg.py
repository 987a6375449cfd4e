"""Minimal deterministic SVG 1.1 charts for disclosed representations.

Every datum, group or region becomes exactly one mark element (class
``mark``).  Dots are stacked, never jittered, so the layout carries no
randomness of its own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping
from xml.sax.saxutils import escape, quoteattr

from .core import Bundle, Interval, Kind, SummaryRep, as_representation, fmt_num

CHARTS = ("dotplot", "scatter", "histogram", "heatmap", "contour-band")

DEFAULT_STYLE = {
    "width": 480,
    "height": 320,
    "margin": 48,
    "dot_bins": 40,
    "color": "#3b6ea5",
    "title": None,
}

_LAYER_COLORS = ("#3b6ea5", "#c0504d", "#4f8f3a", "#8064a2")


class ChartError(ValueError):
    pass


def _n(v: float) -> str:
    """Coordinates with fixed precision; avoids ``-0.00``."""
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _interval_keys(s: SummaryRep) -> list[str]:
    if not s.groups:
        return [k for k in s.keys if k in s.key_levels]
    return [k for i, k in enumerate(s.keys) if all(isinstance(g.key[i], Interval) for g in s.groups)]


def compatible_charts(rep) -> list[str]:
    rep = as_representation(rep)
    if rep.kind is Kind.SAMPLE:
        return ["dotplot", "scatter"]
    if rep.kind is Kind.SUMMARY:
        s = rep.payload
        if s.domain is not None and any(g.region is not None for g in s.groups):
            return ["contour-band"]
        ivs = _interval_keys(s)
        return ["histogram"] if len(ivs) == 1 else ["heatmap"] if len(ivs) == 2 else []
    return []


def auto_chart(rep) -> str:
    rep = as_representation(rep)
    options = compatible_charts(rep)
    if not options:
        raise ChartError(f"no chart draws a {rep.kind.value} representation; band or aggregate it first")
    if rep.kind is Kind.SAMPLE:
        numeric = [c for c in rep.table.columns if c.kind.numeric]
        return "scatter" if len(numeric) >= 2 else "dotplot"
    return options[0]


@dataclass
class _Layer:
    chart: str
    rep: Any
    style: Mapping[str, Any]
    color: str

    # each returns data-space extent (xlo, xhi, ylo, yhi) and marks given scales
    def setup(self):
        getattr(self, "_setup_" + self.chart.replace("-", "_"))()

    def _numeric_cols(self):
        t = self.rep.table
        return [c.name for c in t.columns if c.kind.numeric]

    def _setup_dotplot(self):
        t = self.rep.table
        col = self.style.get("x") or (self._numeric_cols() or [None])[0]
        if col is None and t.columns:
            raise ChartError("dotplot needs a numeric column")
        xs = [float(v) for v in t.numeric(col).values if v is not None] if col else []
        self.label = (col or "", "count")
        if not xs:
            self.extent = (0.0, 1.0, 0.0, 1.0)
            self.items = []
            return
        lo, hi = min(xs), max(xs)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        bins = int(self.style["dot_bins"])
        w = (hi - lo) / bins
        stacks: dict[int, int] = {}
        items = []
        for v in sorted(xs):
            b = min(int((v - lo) / w), bins - 1)
            level = stacks.get(b, 0)
            stacks[b] = level + 1
            items.append((lo + (b + 0.5) * w, level + 0.5))
        self.dot_w = w
        self.extent = (lo, hi, 0.0, max(max(stacks.values()), 1))
        self.items = items

    def _setup_scatter(self):
        t = self.rep.table
        cols = self._numeric_cols()
        x = self.style.get("x") or (cols[0] if cols else None)
        y = self.style.get("y") or (cols[1] if len(cols) > 1 else None)
        if x is None or y is None:
            if t.n_rows == 0:
                self.extent, self.items, self.label = (0.0, 1.0, 0.0, 1.0), [], (x or "", y or "")
                return
            raise ChartError("scatter needs two numeric columns; use dotplot for one")
        xv, yv = t.numeric(x).values, t.numeric(y).values
        self.items = [(float(a), float(b)) for a, b in zip(xv, yv) if a is not None and b is not None]
        self.label = (x, y)
        self.extent = _extent([p[0] for p in self.items], [p[1] for p in self.items])

    def _value_stat(self, s: SummaryRep) -> str:
        for name in ("count", "mass", "fraction"):
            if name in s.stat_names:
                return name
        raise ChartError(f"summary has no count or mass to draw (stats: {list(s.stat_names)})")

    def _setup_histogram(self):
        s = self.rep.payload
        key = _interval_keys(s)[0]
        axis = s.keys.index(key)
        stat = self._value_stat(s)
        items = []
        for g in s.groups:
            iv = g.key[axis]
            v = float(s.stat(g, stat) or 0.0)
            items.append((iv.lo, iv.hi, v / iv.width if iv.width > 0 else 0.0))
        self.items = items
        self.label = (key, f"{stat} per unit")
        xs = [i[0] for i in items] + [i[1] for i in items]
        self.extent = _extent(xs or [0.0, 1.0], [0.0] + [i[2] for i in items])

    def _setup_heatmap(self):
        s = self.rep.payload
        kx, ky = _interval_keys(s)[:2]
        ax, ay = s.keys.index(kx), s.keys.index(ky)
        stat = self._value_stat(s)
        self.items = [(g.key[ax], g.key[ay], float(s.stat(g, stat) or 0.0)) for g in s.groups]
        self.vmax = max([i[2] for i in self.items], default=0.0)
        self.label = (kx, ky)
        levels = [s.key_levels.get(kx, ()), s.key_levels.get(ky, ())]
        xs = [iv.lo for iv in levels[0]] + [iv.hi for iv in levels[0]] + [i[0].lo for i in self.items] + [i[0].hi for i in self.items]
        ys = [iv.lo for iv in levels[1]] + [iv.hi for iv in levels[1]] + [i[1].lo for i in self.items] + [i[1].hi for i in self.items]
        self.extent = _extent(xs or [0.0, 1.0], ys or [0.0, 1.0])

    def _setup_contour_band(self):
        s = self.rep.payload
        axes = s.domain
        if len(axes) not in (1, 2):
            raise ChartError("contour-band draws 1-D or 2-D domains")
        self.axes = axes
        self.items = sorted(((g.key[0], g.region) for g in s.groups if g.region is not None),
                            key=lambda item: -float(item[0]) if isinstance(item[0], (int, float)) else 0)
        half = [a.step / 2 for a in axes]
        if len(axes) == 2:
            self.label = (axes[0].name, axes[1].name)
            self.extent = (axes[0].lo - half[0], axes[0].hi + half[0], axes[1].lo - half[1], axes[1].hi + half[1])
        else:
            self.label = (axes[0].name, "")
            self.extent = (axes[0].lo - half[0], axes[0].hi + half[0], 0.0, 1.0)

    # --- drawing -----------------------------------------------------------

    def marks(self, sx, sy) -> list[str]:
        return getattr(self, "_draw_" + self.chart.replace("-", "_"))(sx, sy)

    def _draw_dotplot(self, sx, sy):
        if not self.items:
            return []
        r = max(min(abs(sx(self.dot_w) - sx(0.0)) / 2, abs(sy(1.0) - sy(0.0)) / 2), 0.5)
        return [f'<circle class="mark" cx="{_n(sx(x))}" cy="{_n(sy(y))}" r="{_n(r)}" fill="{self.color}"/>'
                for x, y in self.items]

    def _draw_scatter(self, sx, sy):
        return [f'<circle class="mark" cx="{_n(sx(x))}" cy="{_n(sy(y))}" r="2.50" fill="{self.color}" '
                f'fill-opacity="0.7"/>' for x, y in self.items]

    def _draw_histogram(self, sx, sy):
        out = []
        for lo, hi, h in self.items:
            x0, x1, y0, y1 = sx(lo), sx(hi), sy(h), sy(0.0)
            out.append(f'<rect class="mark" x="{_n(x0)}" y="{_n(y0)}" width="{_n(x1 - x0)}" '
                       f'height="{_n(y1 - y0)}" fill="{self.color}" stroke="#ffffff"/>')
        return out

    def _draw_heatmap(self, sx, sy):
        out = []
        for ivx, ivy, v in self.items:
            x0, x1, y0, y1 = sx(ivx.lo), sx(ivx.hi), sy(ivy.hi), sy(ivy.lo)
            shade = v / self.vmax if self.vmax > 0 else 0.0
            out.append(f'<rect class="mark" x="{_n(x0)}" y="{_n(y0)}" width="{_n(x1 - x0)}" '
                       f'height="{_n(y1 - y0)}" fill="{_ramp(shade)}"/>')
        return out

    def _draw_contour_band(self, sx, sy):
        out = []
        axes = self.axes
        for i, (level, region) in enumerate(self.items):
            parts = []
            for cell in sorted(region):
                if len(axes) == 2:
                    ix, iy = divmod(cell, axes[1].n)
                    cx = axes[0].lo + ix * axes[0].step
                    cy = axes[1].lo + iy * axes[1].step
                    x0, x1 = sx(cx - axes[0].step / 2), sx(cx + axes[0].step / 2)
                    y0, y1 = sy(cy + axes[1].step / 2), sy(cy - axes[1].step / 2)
                else:
                    cx = axes[0].lo + cell * axes[0].step
                    x0, x1 = sx(cx - axes[0].step / 2), sx(cx + axes[0].step / 2)
                    y0, y1 = sy(1.0), sy(0.0)
                parts.append(f"M{_n(x0)} {_n(y0)}H{_n(x1)}V{_n(y1)}H{_n(x0)}Z")
            opacity = 0.25 + 0.5 * (i + 1) / len(self.items)
            out.append(f'<path class="mark" data-level={quoteattr(fmt_num(level))} d="{"".join(parts)}" '
                       f'fill="{self.color}" fill-opacity="{opacity:.2f}"/>')
        return out


def _ramp(t: float) -> str:
    lo, hi = (247, 251, 255), (8, 48, 107)
    rgb = [round(a + (b - a) * t) for a, b in zip(lo, hi)]
    return "#" + "".join(f"{c:02x}" for c in rgb)


def _extent(xs, ys):
    if not xs:
        return (0.0, 1.0, 0.0, 1.0)
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x0 == x1:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y0 == y1:
        y0, y1 = y0 - 0.5, y1 + 0.5
    return (float(x0), float(x1), float(y0), float(y1))


def render_svg(rep, chart: str | None = None, style: Mapping[str, Any] | None = None) -> bytes:
    """Render a representation (or every layer of a bundle) as SVG bytes."""
    style = {**DEFAULT_STYLE, **(style or {})}
    members = list(rep.members) if isinstance(rep, Bundle) else [rep]
    layers = []
    for i, m in enumerate(members):
        m = as_representation(m)
        kind = chart if chart is not None and not isinstance(rep, Bundle) else auto_chart(m)
        if kind not in CHARTS:
            raise ChartError(f"unknown chart {kind!r}; expected one of {CHARTS}")
        options = compatible_charts(m)
        if kind not in options:
            hint = ", ".join(options) if options else "none (band or aggregate it first)"
            raise ChartError(f"a {kind} cannot draw a {m.kind.value} representation; compatible: {hint}")
        layer = _Layer(kind, m, style, _LAYER_COLORS[i % len(_LAYER_COLORS)] if len(members) > 1 else style["color"])
        layer.setup()
        layers.append(layer)
    x0 = min(l.extent[0] for l in layers)
    x1 = max(l.extent[1] for l in layers)
    y0 = min(l.extent[2] for l in layers)
    y1 = max(l.extent[3] for l in layers)
    w, h, m = float(style["width"]), float(style["height"]), float(style["margin"])

    def sx(v):
        return m + (v - x0) / (x1 - x0) * (w - 2 * m)

    def sy(v):
        return h - m - (v - y0) / (y1 - y0) * (h - 2 * m)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{int(w)}" height="{int(h)}" '
        f'viewBox="0 0 {int(w)} {int(h)}" font-family="sans-serif" font-size="11">',
    ]
    if style.get("title"):
        out.append(f'<text x="{_n(w / 2)}" y="{_n(m / 2)}" text-anchor="middle">{escape(str(style["title"]))}</text>')
    out.append(f'<g class="axes" stroke="#333333" stroke-width="1">'
               f'<line x1="{_n(m)}" y1="{_n(h - m)}" x2="{_n(w - m)}" y2="{_n(h - m)}"/>'
               f'<line x1="{_n(m)}" y1="{_n(m)}" x2="{_n(m)}" y2="{_n(h - m)}"/></g>')
    xl, yl = layers[0].label
    out.append(f'<text x="{_n(m)}" y="{_n(h - m + 16)}">{escape(_tick(x0))}</text>')
    out.append(f'<text x="{_n(w - m)}" y="{_n(h - m + 16)}" text-anchor="end">{escape(_tick(x1))}</text>')
    out.append(f'<text x="{_n(w / 2)}" y="{_n(h - 8)}" text-anchor="middle">{escape(xl)}</text>')
    out.append(f'<text x="{_n(m - 4)}" y="{_n(h - m)}" text-anchor="end">{escape(_tick(y0))}</text>')
    out.append(f'<text x="{_n(m - 4)}" y="{_n(m + 4)}" text-anchor="end">{escape(_tick(y1))}</text>')
    out.append(f'<text x="12" y="{_n(h / 2)}" transform="rotate(-90 12 {_n(h / 2)})" '
               f'text-anchor="middle">{escape(yl)}</text>')
    for i, layer in enumerate(layers):
        out.append(f'<g class="layer" data-chart="{layer.chart}" data-index="{i}">')
        out.extend(layer.marks(sx, sy))
        out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def _tick(v: float) -> str:
    if v == 0 or 1e-3 <= abs(v) < 1e6:
        return f"{v:.4g}"
    return f"{v:.3e}"


def mark_count(svg: bytes) -> int:
    return svg.count(b'class="mark"')


__all__ = ["CHARTS", "ChartError", "render_svg", "auto_chart", "compatible_charts", "mark_count"]
