"""Geometry kernel for rectilinear room outlines.

Coordinates are layout units (256 units = 18 m) in a screen-style frame:
x grows to the right and y grows downward. A polygon is stored with positive
shoelace area and starts at its upper-left-most corner (minimal y, then
minimal x), which is also the origin of the unit arc-length parameter.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

METERS_PER_UNIT = 18.0 / 256.0

FACINGS = ("up", "right", "down", "left")
FACING_VECTORS = {
    "up": (0.0, -1.0),
    "right": (1.0, 0.0),
    "down": (0.0, 1.0),
    "left": (-1.0, 0.0),
}
OPPOSITE = {"up": "down", "down": "up", "left": "right", "right": "left"}


class GeometryError(ValueError):
    """Raised when a polygon or point violates a geometric contract."""


def _drop_redundant(pts: np.ndarray, tol: float) -> np.ndarray:
    # remove repeated points and vertices lying on a straight run
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        keep = []
        n = len(pts)
        for i in range(n):
            prev, cur, nxt = pts[i - 1], pts[i], pts[(i + 1) % n]
            if np.linalg.norm(cur - prev) <= tol:
                changed = True
                continue
            cross = (cur[0] - prev[0]) * (nxt[1] - cur[1]) - (cur[1] - prev[1]) * (nxt[0] - cur[0])
            dot = (cur[0] - prev[0]) * (nxt[0] - cur[0]) + (cur[1] - prev[1]) * (nxt[1] - cur[1])
            if abs(cross) <= tol * max(1.0, np.abs(pts).max()) and dot >= 0:
                changed = True
                continue
            keep.append(i)
        pts = pts[keep]
    return pts


def shoelace(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(a, b, c, d) -> bool:
    # proper or touching intersection of closed segments ab and cd
    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    def on_seg(p, q, r):
        return min(p[0], r[0]) - 1e-12 <= q[0] <= max(p[0], r[0]) + 1e-12 and \
            min(p[1], r[1]) - 1e-12 <= q[1] <= max(p[1], r[1]) + 1e-12

    o1, o2, o3, o4 = orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(a, c, b):
        return True
    if o2 == 0 and on_seg(a, d, b):
        return True
    if o3 == 0 and on_seg(c, a, d):
        return True
    if o4 == 0 and on_seg(c, b, d):
        return True
    return False


def is_simple(pts: np.ndarray) -> bool:
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(a, b, pts[j], pts[(j + 1) % n]):
                return False
    return True


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle given by its upper-left corner and extents."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise GeometryError(f"negative rectangle extent: {self}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def corners(self) -> np.ndarray:
        return np.array([[self.x, self.y], [self.x2, self.y], [self.x2, self.y2], [self.x, self.y2]])


@dataclass(frozen=True)
class OutlineSample:
    """Unit arc-length parameters sampled along an outline."""

    params: np.ndarray
    corner_flags: np.ndarray

    def __len__(self) -> int:
        return len(self.params)


class RectPolygon:
    """Simple rectilinear polygon in canonical form.

    The vertex loop is reoriented to positive area, stripped of collinear
    vertices and rotated so that vertex 0 is the upper-left-most corner.
    """

    __slots__ = ("_v", "__dict__")

    def __init__(self, vertices: Iterable[Sequence[float]], tol: float = 1e-9):
        pts = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise GeometryError("non-finite vertex coordinates")
        if len(pts) >= 2 and np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        pts = _drop_redundant(pts, tol)
        if len(pts) < 4:
            raise GeometryError("a rectilinear polygon needs at least 4 corners")
        area = shoelace(pts)
        if abs(area) <= tol:
            raise GeometryError("degenerate polygon area")
        if area < 0:
            pts = pts[::-1]
        n = len(pts)
        d = np.roll(pts, -1, axis=0) - pts
        horiz = np.abs(d[:, 1]) <= tol * max(1.0, np.abs(pts).max())
        vert = np.abs(d[:, 0]) <= tol * max(1.0, np.abs(pts).max())
        if not np.all(horiz ^ vert):
            raise GeometryError("every edge must be axis-aligned")
        if np.any(horiz == np.roll(horiz, -1)):
            raise GeometryError("edges must alternate horizontal and vertical")
        # snap the shared coordinate of each edge exactly
        for i in range(n):
            j = (i + 1) % n
            if horiz[i]:
                pts[j, 1] = pts[i, 1]
            else:
                pts[j, 0] = pts[i, 0]
        if n % 2:
            raise GeometryError("odd corner count")
        if not is_simple(pts):
            raise GeometryError("polygon self-intersects")
        order = np.lexsort((pts[:, 0], pts[:, 1]))
        start = int(order[0])
        self._v = np.roll(pts, -start, axis=0)
        self._v.setflags(write=False)

    # --- basic properties -------------------------------------------------

    @property
    def vertices(self) -> np.ndarray:
        return self._v

    def __len__(self) -> int:
        return len(self._v)

    def __eq__(self, other) -> bool:
        return isinstance(other, RectPolygon) and self._v.shape == other._v.shape \
            and bool(np.array_equal(self._v, other._v))

    def __hash__(self):
        return hash(self._v.tobytes())

    def __repr__(self) -> str:
        pts = ", ".join(f"({x:g},{y:g})" for x, y in self._v)
        return f"RectPolygon([{pts}])"

    def allclose(self, other: "RectPolygon", atol: float = 1e-9) -> bool:
        return self._v.shape == other._v.shape and bool(np.allclose(self._v, other._v, atol=atol))

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self._v, -1, axis=0) - self._v, axis=1)

    @cached_property
    def cumulative(self) -> np.ndarray:
        """Arc length at each corner, with the perimeter appended."""
        return np.concatenate([[0.0], np.cumsum(self.edge_lengths)])

    @property
    def perimeter(self) -> float:
        return float(self.cumulative[-1])

    @cached_property
    def area(self) -> float:
        return shoelace(self._v)

    @cached_property
    def centroid(self) -> np.ndarray:
        x, y = self._v[:, 0], self._v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        a = cr.sum() / 2.0
        return np.array([((x + xn) * cr).sum() / (6 * a), ((y + yn) * cr).sum() / (6 * a)])

    @cached_property
    def corner_params(self) -> np.ndarray:
        return self.cumulative[:-1] / self.perimeter

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        lo, hi = self._v.min(axis=0), self._v.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def edge(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self._v[k], self._v[(k + 1) % len(self._v)]

    def is_vertical(self, k: int) -> bool:
        a, b = self.edge(k)
        return a[0] == b[0]

    def edge_facing(self, k: int) -> str:
        """Outward normal of edge ``k`` as a facing name."""
        a, b = self.edge(k)
        d = b - a
        nx, ny = d[1], -d[0]
        if abs(nx) > abs(ny):
            return "right" if nx > 0 else "left"
        return "down" if ny > 0 else "up"

    def edge_interval(self, k: int) -> tuple[float, float]:
        """Unit-parameter interval covered by edge ``k``."""
        p = self.perimeter
        return float(self.cumulative[k] / p), float(self.cumulative[k + 1] / p)

    # --- parametrization --------------------------------------------------

    def edge_at(self, u: float) -> int:
        s = u * self.perimeter
        k = int(np.searchsorted(self.cumulative, s, side="right") - 1)
        return min(max(k, 0), len(self._v) - 1)

    def arc_points(self, us) -> np.ndarray:
        us = np.asarray(us, dtype=float)
        s = np.mod(us, 1.0) * self.perimeter
        k = np.clip(np.searchsorted(self.cumulative, s, side="right") - 1, 0, len(self._v) - 1)
        a = self._v[k]
        b = self._v[(k + 1) % len(self._v)]
        t = (s - self.cumulative[k]) / self.edge_lengths[k]
        return a + (b - a) * t[..., None]

    def locate(self, point: Sequence[float]) -> tuple[float, int, float]:
        """Project ``point`` on the outline: (unit param, edge index, distance)."""
        p = np.asarray(point, dtype=float)
        a = self._v
        b = np.roll(self._v, -1, axis=0)
        d = b - a
        t = np.clip(((p - a) * d).sum(axis=1) / (d * d).sum(axis=1), 0.0, 1.0)
        foot = a + d * t[:, None]
        dist = np.linalg.norm(foot - p, axis=1)
        k = int(np.argmin(dist))
        s = self.cumulative[k] + t[k] * self.edge_lengths[k]
        u = float(s / self.perimeter)
        if u >= 1.0:
            u -= 1.0
        return u, k, float(dist[k])

    # --- transforms -------------------------------------------------------

    def translated(self, dx: float, dy: float) -> "RectPolygon":
        return RectPolygon(self._v + np.array([dx, dy]))

    def scaled(self, s: float) -> "RectPolygon":
        return RectPolygon(self._v * s)

    def rotated90(self, quarter_turns: int = 1) -> "RectPolygon":
        """Rotate clockwise on screen by 90 degrees per turn, keeping the bbox corner."""
        q = quarter_turns % 4
        pts = self._v.copy()
        lo = pts.min(axis=0)
        for _ in range(q):
            pts = np.column_stack([-pts[:, 1], pts[:, 0]])
        pts = pts - pts.min(axis=0) + lo
        return RectPolygon(pts)


def rotate_point90(p: Sequence[float], quarter_turns: int) -> np.ndarray:
    q = np.asarray(p, dtype=float)
    for _ in range(quarter_turns % 4):
        q = np.array([-q[1], q[0]])
    return q


def rotate_facing(facing: str, quarter_turns: int) -> str:
    return FACINGS[(FACINGS.index(facing) + quarter_turns) % 4]


def arc_point(poly: RectPolygon, u: float) -> np.ndarray:
    """Point at normalized arc length ``u`` from the upper-left-most corner."""
    if not 0.0 <= u < 1.0:
        raise GeometryError(f"outline parameter {u} outside [0, 1)")
    return poly.arc_points(np.array([u]))[0]


def sample_outline(poly: RectPolygon, n: int) -> OutlineSample:
    """Sample ``n`` parameters including every corner.

    Extra samples are allotted to edges in proportion to edge length
    (largest remainder, ties to the lower edge index) and spaced evenly on
    each edge.
    """
    c = len(poly)
    if n < c:
        raise GeometryError(f"sample count {n} below corner count {c}")
    extra = n - c
    quota = extra * poly.edge_lengths / poly.perimeter
    counts = np.floor(quota).astype(int)
    left = extra - int(counts.sum())
    if left:
        frac = quota - counts
        order = sorted(range(c), key=lambda k: (-frac[k], k))
        for k in order[:left]:
            counts[k] += 1
    params, flags = [], []
    for k in range(c):
        u0, u1 = poly.edge_interval(k)
        params.append(u0)
        flags.append(True)
        m = counts[k]
        for j in range(1, m + 1):
            params.append(u0 + (u1 - u0) * j / (m + 1))
            flags.append(False)
    return OutlineSample(np.array(params), np.array(flags, dtype=bool))


def chamfer(a, b) -> float:
    """Two-way chamfer distance: mean nearest-neighbour distance each way."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise GeometryError("chamfer distance of an empty point set")
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(da.mean() + db.mean())


def normalize_outline(poly: RectPolygon) -> RectPolygon:
    """Scale to unit area and move the area centroid to the origin."""
    if poly.area <= 0:
        raise GeometryError("cannot normalize a degenerate outline")
    s = 1.0 / np.sqrt(poly.area)
    return RectPolygon((poly.vertices - poly.centroid) * s)


def point_in_polygon(p: Sequence[float], verts: np.ndarray) -> bool:
    x, y = float(p[0]), float(p[1])
    inside = False
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def points_in_polygon(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0:1], pts[:, 1:2]
    a = verts[None, :, :]
    b = np.roll(verts, -1, axis=0)[None, :, :]
    y1, y2 = a[..., 1], b[..., 1]
    crosses = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = a[..., 0] + (y - y1) * (b[..., 0] - a[..., 0]) / (y2 - y1)
    hits = crosses & (xc > x)
    return (hits.sum(axis=1) % 2) == 1


@dataclass(frozen=True)
class GridDecomposition:
    """Maximal decomposition with grid bookkeeping.

    ``cells[k]`` is the (column, row) of ``rects[k]``; ``right`` and ``below``
    list index pairs (i, j) where rect j is the right (lower) neighbour of i.
    """

    rects: tuple[Rect, ...]
    cells: tuple[tuple[int, int], ...]
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    right: tuple[tuple[int, int], ...]
    below: tuple[tuple[int, int], ...]


def maximal_grid(poly: RectPolygon) -> GridDecomposition:
    xs = np.unique(poly.vertices[:, 0])
    ys = np.unique(poly.vertices[:, 1])
    rects, cells = [], []
    index = {}
    for r in range(len(ys) - 1):
        for c in range(len(xs) - 1):
            w, h = xs[c + 1] - xs[c], ys[r + 1] - ys[r]
            if w <= 0 or h <= 0:
                continue
            center = ((xs[c] + xs[c + 1]) / 2, (ys[r] + ys[r + 1]) / 2)
            if point_in_polygon(center, poly.vertices):
                index[(c, r)] = len(rects)
                rects.append(Rect(float(xs[c]), float(ys[r]), float(w), float(h)))
                cells.append((c, r))
    right = [(index[(c, r)], index[(c + 1, r)]) for (c, r) in cells if (c + 1, r) in index]
    below = [(index[(c, r)], index[(c, r + 1)]) for (c, r) in cells if (c, r + 1) in index]
    return GridDecomposition(tuple(rects), tuple(cells), tuple(map(float, xs)), tuple(map(float, ys)),
                             tuple(right), tuple(below))


def decompose_maximal(poly: RectPolygon) -> list[Rect]:
    """Grid cells over all vertex coordinates that lie inside ``poly``."""
    return list(maximal_grid(poly).rects)


# --- mean value coordinates ---------------------------------------------


def _mvc_raw(points: np.ndarray, cage: np.ndarray, tol: float):
    s = cage[None, :, :] - points[:, None, :]
    r = np.linalg.norm(s, axis=2)
    s1 = np.roll(s, -1, axis=1)
    r1 = np.roll(r, -1, axis=1)
    det = s[..., 0] * s1[..., 1] - s[..., 1] * s1[..., 0]
    dot = (s * s1).sum(axis=2)
    denom = r * r1 + dot
    scale = max(1.0, float(np.abs(cage).max()))
    on_vertex = (r <= tol * scale).any(axis=1)
    on_edge = ((np.abs(det) <= tol * scale * scale) & (dot <= 0)).any(axis=1)
    boundary = on_vertex | on_edge
    with np.errstate(divide="ignore", invalid="ignore"):
        t = det / denom
        w = (np.roll(t, 1, axis=1) + t) / r
    return w, boundary


def mvc_weights_many(points, cage, tol: float = 1e-12) -> np.ndarray:
    """Mean value coordinates of many interior points w.r.t. one cage."""
    cage = np.asarray(cage, dtype=float).reshape(-1, 2)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    w, boundary = _mvc_raw(pts, cage, tol)
    inside = points_in_polygon(pts, cage)
    bad = boundary | ~inside
    if bad.any():
        k = int(np.argmax(bad))
        raise GeometryError(f"point {pts[k].tolist()} is not strictly inside the cage")
    return w / w.sum(axis=1, keepdims=True)


def mvc_weights(p: Sequence[float], cage) -> np.ndarray:
    """Mean value coordinates of ``p`` (strictly inside ``cage``)."""
    return mvc_weights_many(np.asarray(p, dtype=float)[None, :], cage)[0]


def mvc_map(p: Sequence[float], cage_src, cage_tgt) -> np.ndarray:
    src = np.asarray(cage_src, dtype=float).reshape(-1, 2)
    tgt = np.asarray(cage_tgt, dtype=float).reshape(-1, 2)
    if src.shape != tgt.shape:
        raise GeometryError("source and target cages differ in vertex count")
    return mvc_weights(p, src) @ tgt
