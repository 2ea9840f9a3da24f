"""Minimal static SVG charts: line series, points with error bars, bars."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
MARGIN = 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    xs: list[float]
    ys: list[float]
    errors: list[float] | None = None
    style: str = "line"  # "line" or "points"


@dataclass
class Chart:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)

    def add(self, series: Series) -> "Chart":
        self.series.append(series)
        return self

    def _extent(self):
        xs, ys = [], []
        for s in self.series:
            xs.extend(s.xs)
            errs = s.errors or [0.0] * len(s.ys)
            ys.extend(y - e for y, e in zip(s.ys, errs))
            ys.extend(y + e for y, e in zip(s.ys, errs))
        if not xs:
            return 0.0, 1.0, 0.0, 1.0
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        if x0 == x1:
            x0, x1 = x0 - 1, x1 + 1
        if y0 == y1:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        x0, x1, y0, y1 = self._extent()
        w, h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

        def px(x):
            return MARGIN + (x - x0) / (x1 - x0) * w

        def py(y):
            return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * h

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(self.title)}</text>',
            f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
            f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
            f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(self.xlabel)}</text>',
            f'<text x="15" y="{HEIGHT / 2:.1f}" text-anchor="middle" transform="rotate(-90 15 {HEIGHT / 2:.1f})">{escape(self.ylabel)}</text>',
        ]
        for i in range(5):
            xv, yv = x0 + i * (x1 - x0) / 4, y0 + i * (y1 - y0) / 4
            out.append(f'<text x="{px(xv):.1f}" y="{HEIGHT - MARGIN + 15}" text-anchor="middle">{xv:.4g}</text>')
            out.append(f'<text x="{MARGIN - 5}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.4g}</text>')
        for k, s in enumerate(self.series):
            color = PALETTE[k % len(PALETTE)]
            if s.style == "line" and len(s.xs) > 1:
                pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.xs, s.ys))
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
            else:
                for j, (x, y) in enumerate(zip(s.xs, s.ys)):
                    if s.errors:
                        e = s.errors[j]
                        out.append(f'<line x1="{px(x):.2f}" y1="{py(y - e):.2f}" x2="{px(x):.2f}" y2="{py(y + e):.2f}" stroke="{color}"/>')
                    out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
            ly = MARGIN + 14 * k
            out.append(f'<rect x="{WIDTH - MARGIN - 150}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{WIDTH - MARGIN - 135}" y="{ly + 1}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def bar_chart(title: str, xlabel: str, ylabel: str, labels: list[str], values: list[float]) -> str:
    w, h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    top = max(values) if values and max(values) > 0 else 1.0
    slot = w / max(len(values), 1)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2:.1f}" text-anchor="middle" transform="rotate(-90 15 {HEIGHT / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for i, (lab, v) in enumerate(zip(labels, values)):
        bh = v / top * h
        x = MARGIN + i * slot + 0.15 * slot
        out.append(f'<rect x="{x:.2f}" y="{HEIGHT - MARGIN - bh:.2f}" width="{0.7 * slot:.2f}" height="{bh:.2f}" fill="{PALETTE[0]}"/>')
        out.append(f'<text x="{x + 0.35 * slot:.2f}" y="{HEIGHT - MARGIN + 15}" text-anchor="middle">{escape(lab)}</text>')
        out.append(f'<text x="{x + 0.35 * slot:.2f}" y="{HEIGHT - MARGIN - bh - 4:.2f}" text-anchor="middle">{v:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
