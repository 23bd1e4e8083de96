"""Minimal SVG figures of correlation sets in the ``(p11, p12)`` square."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

SIZE = 600
PAD = 60


def _xy(p11, p12):
    span = SIZE - 2 * PAD
    return PAD + span * p11, SIZE - PAD - span * p12


def _polyline(vertices, color, width=2.0, closed=True):
    if len(vertices) == 0:
        return ""
    pts = " ".join("{:.3f},{:.3f}".format(*_xy(x, y)) for x, y in vertices)
    if len(vertices) == 1:
        x, y = _xy(*vertices[0])
        return f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3" fill="{color}"/>'
    tag = "polygon" if closed and len(vertices) > 2 else "polyline"
    return f'<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'


def _axes():
    out = []
    x0, y0 = _xy(0.0, 0.0)
    x1, y1 = _xy(1.0, 1.0)
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="#444"/>')
    for t in np.linspace(0.0, 1.0, 6):
        tx, _ = _xy(t, 0.0)
        _, ty = _xy(0.0, t)
        out.append(f'<line x1="{tx:.1f}" y1="{y0}" x2="{tx:.1f}" y2="{y0 + 5}" stroke="#444"/>')
        out.append(f'<text x="{tx:.1f}" y="{y0 + 20}" font-size="12" text-anchor="middle">{t:.1f}</text>')
        out.append(f'<line x1="{x0 - 5}" y1="{ty:.1f}" x2="{x0}" y2="{ty:.1f}" stroke="#444"/>')
        out.append(f'<text x="{x0 - 8}" y="{ty + 4:.1f}" font-size="12" text-anchor="end">{t:.1f}</text>')
    out.append(f'<text x="{SIZE / 2}" y="{SIZE - 15}" font-size="14" text-anchor="middle">p(1|1)</text>')
    out.append(f'<text x="18" y="{SIZE / 2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {SIZE / 2})">p(1|2)</text>')
    return out


def figure(curves=(), points=None, highlight=None, title=None) -> str:
    """SVG document with boundary curves and data points.

    ``curves`` holds ``(vertices, color, label)`` triples; ``highlight``
    marks point indices drawn in red.
    """
    body = [f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>', *_axes()]
    for i, (verts, color, label) in enumerate(curves):
        body.append(_polyline(np.asarray(verts), color))
        if label:
            body.append(f'<text x="{SIZE - PAD}" y="{PAD - 30 + 16 * i}" font-size="12" text-anchor="end" fill="{color}">{escape(label)}</text>')
    if points is not None and len(points):
        bad = set(int(i) for i in (highlight or ()))
        for i, (a, b) in enumerate(np.asarray(points)):
            x, y = _xy(a, b)
            color = "#d62728" if i in bad else "#1f77b4"
            r = 3.0 if i in bad else 1.6
            body.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{r}" fill="{color}"/>')
    if title:
        body.append(f'<text x="{PAD}" y="{PAD - 30}" font-size="14">{escape(title)}</text>')
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">\n'
        + "\n".join(s for s in body if s)
        + "\n</svg>\n"
    )


def write(path, svg: str):
    Path(path).write_text(svg)
    return Path(path)
