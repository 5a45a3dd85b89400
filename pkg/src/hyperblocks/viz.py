"""Parallel-coordinates SVG rendering of points and hyperblocks.

Each displayed attribute gets a vertical axis (0 at the bottom, 1 at the
top), each point a polyline across the axes, and each block a translucent
band: a segment per interval on every axis, joined to the neighbouring
axes by a filled quadrilateral spanning the constraint's outer extent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import DataError
from .hyperblock import Hyperblock

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass(frozen=True)
class RenderSpec:
    attributes: tuple[int, ...] | None = None  # None = all, in dataset order
    sample_limit: int | None = None  # max points drawn per class
    colors: tuple[str, ...] = PALETTE
    fill_opacity: float = 0.18
    outline: bool = True
    width: int = 1200
    height: int = 600
    margin: int = 60
    segment_width: float = 10.0


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Geometry:
    def __init__(self, spec: RenderSpec, n_axes: int):
        self.spec = spec
        left = right = spec.margin
        self.top = spec.margin
        self.bottom = spec.height - spec.margin
        if n_axes == 1:
            self.xs = [spec.width / 2.0]
        else:
            step = (spec.width - left - right) / (n_axes - 1)
            self.xs = [left + i * step for i in range(n_axes)]

    def y(self, v: float) -> float:
        return self.bottom - v * (self.bottom - self.top)


def sample_rows(labels: np.ndarray, limit: int | None) -> np.ndarray:
    """First ``limit`` rows of each class, in row order."""
    if limit is None:
        return np.arange(len(labels))
    keep = np.zeros(len(labels), dtype=bool)
    for c in np.unique(labels):
        keep[np.flatnonzero(labels == c)[:limit]] = True
    return np.flatnonzero(keep)


def render_parallel_coordinates(points, labels, blocks: Sequence[Hyperblock],
                                attribute_names: Sequence[str], spec: RenderSpec | None = None,
                                class_names: Sequence[str] | None = None, title: str | None = None) -> str:
    spec = spec or RenderSpec()
    n = len(attribute_names)
    points = np.asarray(points, dtype=float).reshape(-1, n) if len(points) else np.empty((0, n))
    labels = np.asarray(labels, dtype=int)
    if len(labels) != len(points):
        raise DataError("points and labels differ in length")
    axes = list(range(n)) if spec.attributes is None else [int(a) for a in spec.attributes]
    if not axes:
        raise DataError("no attributes to display")
    if any(not 0 <= a < n for a in axes) or len(set(axes)) != len(axes):
        raise DataError(f"displayed attributes {axes} are not distinct indices below {n}")
    for b in blocks:
        if b.n_attributes != n:
            raise DataError(f"block {b.id} has {b.n_attributes} attributes, dataset has {n}")

    geo = _Geometry(spec, len(axes))
    color = lambda c: spec.colors[int(c) % len(spec.colors)]
    half = spec.segment_width / 2.0
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{spec.width}" '
        f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{_f(spec.width / 2)}" y="{_f(spec.margin / 2)}" '
                   f'text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>')

    out.append('<g class="blocks">')
    for b in blocks:
        col = color(b.label)
        stroke = f' stroke="{col}" stroke-width="1"' if spec.outline else ""
        out.append(f'<g class="block" data-block="{b.id}" data-label="{b.label}">')
        for k in range(len(axes) - 1):
            c0, c1 = b.constraints[axes[k]], b.constraints[axes[k + 1]]
            x0, x1 = geo.xs[k] + half, geo.xs[k + 1] - half
            pts = [(x0, geo.y(c0[-1][1])), (x1, geo.y(c1[-1][1])),
                   (x1, geo.y(c1[0][0])), (x0, geo.y(c0[0][0]))]
            out.append(f'<polygon class="hb-band" points="{" ".join(_f(x) + "," + _f(y) for x, y in pts)}" '
                       f'fill="{col}" fill-opacity="{_f(spec.fill_opacity)}" stroke="none"/>')
        for k, a in enumerate(axes):
            for lo, hi in b.constraints[a]:
                # height from the rounded endpoints so y + height lands exactly on y(lo)
                y_top, y_bot = round(geo.y(hi), 2), round(geo.y(lo), 2)
                out.append(f'<rect class="hb-seg" data-block="{b.id}" data-attr="{a}" '
                           f'data-lo="{lo!r}" data-hi="{hi!r}" x="{_f(geo.xs[k] - half)}" y="{_f(y_top)}" '
                           f'width="{_f(spec.segment_width)}" height="{_f(y_bot - y_top)}" '
                           f'fill="{col}" fill-opacity="{_f(min(1.0, 2 * spec.fill_opacity))}"{stroke}/>')
        out.append("</g>")
    out.append("</g>")

    out.append('<g class="points" fill="none" stroke-width="1">')
    for r in sample_rows(labels, spec.sample_limit):
        coords = " ".join(f"{_f(geo.xs[k])},{_f(geo.y(points[r, a]))}" for k, a in enumerate(axes))
        out.append(f'<polyline class="pt" data-row="{r}" data-label="{labels[r]}" '
                   f'stroke="{color(labels[r])}" stroke-opacity="0.6" points="{coords}"/>')
    out.append("</g>")

    out.append('<g class="axes" stroke="#000000" stroke-width="1.5" font-family="sans-serif" font-size="12">')
    for k, a in enumerate(axes):
        x = geo.xs[k]
        out.append(f'<line class="axis" data-attr="{a}" x1="{_f(x)}" y1="{_f(geo.y(0.0))}" '
                   f'x2="{_f(x)}" y2="{_f(geo.y(1.0))}"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(geo.y(0.0) + 20)}" text-anchor="middle" stroke="none" '
                   f'fill="#000000">{escape(str(attribute_names[a]))}</text>')
    out.append("</g>")

    if class_names:
        out.append('<g class="legend" font-family="sans-serif" font-size="12">')
        for c, name in enumerate(class_names):
            y = spec.margin / 2 + 16 * c
            out.append(f'<rect x="{_f(spec.width - spec.margin - 110)}" y="{_f(y - 9)}" width="10" '
                       f'height="10" fill="{color(c)}"/>')
            out.append(f'<text x="{_f(spec.width - spec.margin - 95)}" y="{_f(y)}" '
                       f'fill="#000000">{escape(str(name))}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
