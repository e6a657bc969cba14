"""Static SVG drawing of a floor plan: one polygon per room, one thick segment per portal."""

from __future__ import annotations

from xml.sax.saxutils import escape, quoteattr

from .model import ROOM_TYPES, FloorPlan

PALETTE = dict(zip(ROOM_TYPES, ("#f4d35e", "#9ecae1", "#fdae6b", "#a1d99b", "#d9d9d9", "#bcbddc")))
PORTAL_COLOR = "#c0392b"
MARGIN = 8.0


def _n(x: float) -> str:
    return f"{float(x):.6g}"


def render_svg(fp: FloorPlan, scale: float = 3.0, labels: bool = True) -> str:
    """SVG text; plan coordinates already have y pointing down, as SVG does."""
    if not fp.rooms:
        lo = hi = (0.0, 0.0)
    else:
        boxes = [pr.outline.bbox for pr in fp.rooms]
        lo = (min(b[0] for b in boxes), min(b[1] for b in boxes))
        hi = (max(b[2] for b in boxes), max(b[3] for b in boxes))
    x0, y0 = lo[0] - MARGIN, lo[1] - MARGIN
    w, h = hi[0] - lo[0] + 2 * MARGIN, hi[1] - lo[1] + 2 * MARGIN
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(w * scale)}" height="{_n(h * scale)}" '
        f'viewBox="{_n(x0)} {_n(y0)} {_n(w)} {_n(h)}">',
        '<g id="rooms" stroke="#333333" stroke-width="0.6" stroke-linejoin="miter">',
    ]
    names = fp.node_ids()
    for name, pr in zip(names, fp.rooms):
        pts = " ".join(f"{_n(x)},{_n(y)}" for x, y in pr.outline.vertices)
        out.append(f'<polygon id={quoteattr("room-" + name)} class={quoteattr(pr.room.room_type)} '
                   f'fill="{PALETTE[pr.room.room_type]}" points="{pts}"/>')
    out.append("</g>")
    out.append(f'<g id="portals" stroke="{PORTAL_COLOR}" stroke-width="2.4" stroke-linecap="butt">')
    for name, pr in zip(names, fp.rooms):
        for k, p in enumerate(pr.room.portals):
            a, b = pr.portal_segment(k)
            out.append(f'<line id={quoteattr(f"portal-{name}-{p.name or k}")} '
                       f'x1="{_n(a[0])}" y1="{_n(a[1])}" x2="{_n(b[0])}" y2="{_n(b[1])}"/>')
    out.append("</g>")
    if labels:
        out.append('<g id="labels" font-family="sans-serif" font-size="5" text-anchor="middle" fill="#222222">')
        for name, pr in zip(names, fp.rooms):
            cx, cy = pr.outline.centroid
            out.append(f'<text x="{_n(cx)}" y="{_n(cy)}">{escape(name)}: {escape(pr.room.room_type)}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
