"""SVG packing diagrams: labeled disks, black contact dots and immobility shading."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .analysis import ANCHORED, FIXED, RATTLER
from .pipeline import PackingResult

VIEWPORT = 1000.0
MARGIN = 0.05

FILLS = {ANCHORED: "#808080", FIXED: "#d3d3d3", RATTLER: "#ffffff"}


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def svg_document(result: PackingResult) -> str:
    cfg = result.configuration
    region = cfg.region
    extent = region.extent
    scale = VIEWPORT * (1 - 2 * MARGIN) / (2 * extent)
    mid = VIEWPORT / 2

    def xy(p):
        # SVG y grows downward
        return mid + p[0] * scale, mid - p[1] * scale

    parts = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{VIEWPORT:g}" height="{VIEWPORT:g}" viewBox="0 0 {VIEWPORT:g} {VIEWPORT:g}">',
        f'<rect x="0" y="0" width="{VIEWPORT:g}" height="{VIEWPORT:g}" fill="#ffffff"/>',
    ]
    outline = region.outline()
    if outline is None:
        cx, cy = xy((0.0, 0.0))
        parts.append(f'<circle class="region" cx="{_fmt(cx)}" cy="{_fmt(cy)}" '
                     f'r="{_fmt(region.radius * scale)}" fill="none" stroke="#000000" stroke-width="2"/>')
    else:
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (xy(v) for v in outline))
        parts.append(f'<polygon class="region" points="{pts}" fill="none" stroke="#000000" stroke-width="2"/>')

    r = cfg.radius * scale
    font = 0.8 * r
    for k, c in enumerate(cfg.centers):
        cx, cy = xy(c)
        label = result.labels[k] if k < len(result.labels) else FIXED
        fill = FILLS.get(label, FILLS[FIXED])
        parts.append(f'<circle class="disk {label}" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" '
                     f'fill="{fill}" stroke="#000000" stroke-width="1"/>')
        parts.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-size="{_fmt(font)}" '
                     f'text-anchor="middle" dominant-baseline="central" font-family="sans-serif">{k + 1}</text>')

    dot = max(0.12 * r, 1.5)
    g = result.bond_graph
    points = [(cfg.centers[i] + cfg.centers[j]) / 2 for i, j in sorted(g.disk_edges)]
    points += [region.wall_foot(cfg.centers[i], w) for i, w in sorted(g.wall_edges)]
    for p in points:
        cx, cy = xy(np.asarray(p))
        parts.append(f'<circle class="bond" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(dot)}" fill="#000000"/>')

    caption = f"n = {cfg.n}, m = {result.m:.15g}, bonds = {g.total}"
    parts.append(f'<text class="caption" x="{mid:g}" y="{VIEWPORT * (1 - MARGIN / 3):g}" font-size="{VIEWPORT * MARGIN / 2.5:g}" '
                 f'text-anchor="middle" font-family="sans-serif">{escape(caption)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_svg(result: PackingResult, path) -> str:
    doc = svg_document(result)
    Path(path).write_text(doc, encoding="utf-8")
    return doc
