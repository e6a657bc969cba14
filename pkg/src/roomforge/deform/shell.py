"""Cage deformation of the room shell and wall-local portal snapping."""

from __future__ import annotations

import numpy as np

from ..geom import METERS_PER_UNIT, GeometryError, mvc_weights_many, points_in_polygon
from .correspond import OutlineCorrespondence
from .mesh import IndexedMesh

BOUNDARY_TOL = 1e-9


class CageError(GeometryError):
    pass


class SnapError(GeometryError):
    pass


def _edge_hits(pts, cage, tol):
    """Nearest cage edge and its parameter for every point within ``tol`` of the cage."""
    a = cage
    d = np.roll(cage, -1, axis=0) - cage
    rel = pts[:, None, :] - a[None, :, :]
    t = np.clip((rel * d[None]).sum(axis=2) / (d * d).sum(axis=1)[None], 0.0, 1.0)
    foot = a[None] + t[..., None] * d[None]
    dist = np.linalg.norm(pts[:, None, :] - foot, axis=2)
    k = dist.argmin(axis=1)
    rows = np.arange(len(pts))
    return k, t[rows, k], dist[rows, k]


def cage_map(points, src_cage, tgt_cage, tol: float = BOUNDARY_TOL) -> np.ndarray:
    """Map 2D points from the source cage to the target cage.

    Interior points use mean value coordinates.  Points on the cage (within
    ``tol`` times the cage size) follow their edge linearly, which is the
    boundary limit of the same coordinates.
    """
    pts = np.asarray(points, float).reshape(-1, 2)
    src = np.asarray(src_cage, float)
    tgt = np.asarray(tgt_cage, float)
    if src.shape != tgt.shape:
        raise CageError("source and target cages differ in vertex count")
    out = np.empty_like(pts)
    if not len(pts):
        return out
    size = max(1.0, float(np.abs(src).max()))
    k, t, dist = _edge_hits(pts, src, tol * size)
    on = dist <= tol * size
    nxt = (k + 1) % len(src)
    out[on] = tgt[k[on]] + t[on, None] * (tgt[nxt[on]] - tgt[k[on]])
    inner = ~on
    if inner.any():
        inside = points_in_polygon(pts[inner], src)
        if not inside.all():
            bad = pts[inner][~inside][0]
            raise CageError(f"vertex {bad.tolist()} lies outside the source cage")
        out[inner] = mvc_weights_many(pts[inner], src, tol=0.0) @ tgt
    return out


def deform_shell(mesh: IndexedMesh, corr: OutlineCorrespondence, scale: float = METERS_PER_UNIT) -> IndexedMesh:
    """Move horizontal coordinates from the source cage to the target cage; heights are kept."""
    src = corr.source_points() * scale
    tgt = corr.target_points() * scale
    v = mesh.vertices.copy()
    v[:, :2] = cage_map(mesh.vertices[:, :2], src, tgt)
    return mesh.with_vertices(v)


def wall_stretch(s, knots_from, knots_to) -> np.ndarray:
    """Piecewise-linear 1D map through the given knots."""
    return np.interp(s, knots_from, knots_to)


def snap_portals(mesh: IndexedMesh, corr: OutlineCorrespondence, target_portals, scale: float = METERS_PER_UNIT,
                 tol: float = BOUNDARY_TOL) -> IndexedMesh:
    """Slide each portal along its wall to its target position.

    ``target_portals`` lists the target-outline portal of every portal pair
    of ``corr``, in order.  Vertices on the wall are moved by a 1D
    piecewise-linear stretch that fixes the wall ends; all other vertices
    stay put.
    """
    tgt = corr.target
    ends = np.array([iv[:2] for iv in corr.portal_intervals]).reshape(-1)
    images = cage_map(corr.source.arc_points(ends), corr.source_points(), corr.target_points()) * scale
    walls: dict[int, list] = {}
    for k, p in enumerate(target_portals):
        walls.setdefault(p.wall, []).append((images[2 * k], images[2 * k + 1], p))
    v = mesh.vertices.copy()
    size = max(1.0, float(np.abs(tgt.vertices).max() * scale))
    for wall, items in sorted(walls.items()):
        a, b = (x * scale for x in tgt.edge(wall))
        length = float(np.linalg.norm(b - a))
        d = (b - a) / length
        knots_from, knots_to = [0.0], [0.0]
        for pa, pb, p in sorted(items, key=lambda it: float((it[0] - a) @ d)):
            qa, qb = (x * scale for x in p.endpoints(tgt))
            for cur, want in ((pa, qa), (pb, qb)):
                knots_from.append(float((cur - a) @ d))
                knots_to.append(float((want - a) @ d))
        knots_from.append(length)
        knots_to.append(length)
        kf, kt = np.array(knots_from), np.array(knots_to)
        if np.any(kt[1:-1] < -tol * size) or np.any(kt[1:-1] > length + tol * size):
            raise SnapError(f"portal target lies outside wall {wall}")
        if np.allclose(kf, kt, atol=tol * size):
            continue
        # a portal flush with a corner collapses the wall piece beyond it
        kt = np.clip(kt, 0.0, length)
        if np.any(np.diff(kf) <= 0) or np.any(np.diff(kt) < 0):
            raise SnapError(f"portals on wall {wall} cannot be stretched into place")
        rel = v[:, :2] - a
        s = rel @ d
        off = rel @ np.array([-d[1], d[0]])
        on = (np.abs(off) <= tol * size) & (s >= -tol * size) & (s <= length + tol * size)
        if not on.any():
            continue
        s_new = wall_stretch(s[on], kf, kt)
        v[on, :2] = a + s_new[:, None] * d + off[on, None] * np.array([-d[1], d[0]])
    return mesh.with_vertices(v)
