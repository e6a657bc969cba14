"""Small builders shared by the test modules."""

import numpy as np

from roomforge.geom import RectPolygon
from roomforge.model import Room, portal_from_segment


def rect_outline(x, y, w, h):
    return RectPolygon([(x, y), (x + w, y), (x + w, y + h), (x, y + h)])


def make_room(rid, rtype, outline, segments, pair_ids=None):
    """Room from absolute portal segments; outline may be a RectPolygon or vertex list."""
    if not isinstance(outline, RectPolygon):
        outline = RectPolygon(outline)
    portals = [portal_from_segment(outline, a, b, (pair_ids or {}).get(k), f"p{k}")
               for k, (a, b) in enumerate(segments)]
    portals.sort(key=lambda p: p.mid)
    return Room(rid, rtype, outline, tuple(portals))


def rect_room(rid, rtype, w, h, doors=(), x=0.0, y=0.0):
    """Rectangle room with doors given as (facing, offset-from-wall-start, width)."""
    segs = []
    for facing, off, width in doors:
        if facing == "up":
            segs.append(((x + off, y), (x + off + width, y)))
        elif facing == "down":
            segs.append(((x + off, y + h), (x + off + width, y + h)))
        elif facing == "left":
            segs.append(((x, y + off), (x, y + off + width)))
        else:
            segs.append(((x + w, y + off), (x + w, y + off + width)))
    return make_room(rid, rtype, rect_outline(x, y, w, h), segs)


def seg_close(a, b, tol=1e-9):
    a0, a1 = map(np.asarray, a)
    b0, b1 = map(np.asarray, b)
    return (np.allclose(a0, b0, atol=tol) and np.allclose(a1, b1, atol=tol)) or \
        (np.allclose(a0, b1, atol=tol) and np.allclose(a1, b0, atol=tol))
