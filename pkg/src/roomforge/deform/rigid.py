"""Rigid furniture: cut out before the cage deformation, placed back afterwards."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from shapely import affinity
from shapely.geometry import Polygon
from shapely.ops import unary_union

from ..geom import METERS_PER_UNIT, GeometryError
from .correspond import OutlineCorrespondence
from .mesh import SHELL_LABELS, IndexedMesh, MeshError, merge, split_label
from .shell import cage_map

SCALE_STEP = 0.95
MIN_SCALE = 0.5
AREA_TOL = 1e-9
DIRECTIONS = ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))


class PlacementFailure(GeometryError):
    def __init__(self, label: str, reason: str = "cannot be placed even at half scale"):
        super().__init__(f"object {label!r}: {reason}")
        self.label = label


@dataclass(frozen=True)
class RigidObject:
    label: str
    mesh: IndexedMesh
    centroid: np.ndarray           # horizontal, meters
    vertex_ids: np.ndarray         # indices into the mesh it was cut from


@dataclass(frozen=True)
class RigidSplit:
    shell: IndexedMesh
    shell_ids: np.ndarray
    objects: tuple[RigidObject, ...]


@dataclass(frozen=True)
class Placement:
    label: str
    offset: tuple[float, float]    # translation of the centroid
    scale: float
    pushed: bool


def _pick(mesh: IndexedMesh, mask):
    f = mesh.faces[mask]
    used = np.unique(f)
    return mesh.select(mask), used


def split_rigid(mesh: IndexedMesh) -> RigidSplit:
    """Shell (floor, ceiling, wall, curtain faces) and one object per other instance."""
    cats = np.array(mesh.categories)
    shell_mask = np.isin(cats, SHELL_LABELS)
    shell, shell_ids = _pick(mesh, shell_mask)
    labels = sorted({l for l, s in zip(mesh.labels, shell_mask) if not s}, key=split_label)
    lab = np.array(mesh.labels)
    objects = []
    taken = set(shell_ids.tolist())
    for l in labels:
        m, ids = _pick(mesh, lab == l)
        if taken & set(ids.tolist()):
            raise MeshError(f"object {l!r} shares vertices with other geometry")
        taken |= set(ids.tolist())
        objects.append(RigidObject(l, m, m.vertices[:, :2].mean(axis=0), ids))
    return RigidSplit(shell, shell_ids, tuple(objects))


# --- collision tests ----------------------------------------------------------------


def footprint(mesh: IndexedMesh):
    """Union of the horizontal projections of all non-degenerate faces."""
    polys = []
    for f in mesh.faces:
        p = Polygon(mesh.vertices[f, :2])
        if p.area > 0:
            polys.append(p)
    return unary_union(polys)


@dataclass
class _Body:
    foot: object
    zlo: float
    zhi: float


def _hits(body: _Body, other: _Body) -> bool:
    if min(body.zhi, other.zhi) - max(body.zlo, other.zlo) <= 0:
        return False
    return body.foot.intersection(other.foot).area > AREA_TOL


def _outside(body: _Body, room) -> bool:
    return body.foot.difference(room).area > AREA_TOL


def _clear_object(body: _Body, other: _Body, d) -> float:
    ax0, ay0, ax1, ay1 = body.foot.bounds
    bx0, by0, bx1, by1 = other.foot.bounds
    if d[0] > 0:
        return bx1 - ax0
    if d[0] < 0:
        return ax1 - bx0
    if d[1] > 0:
        return by1 - ay0
    return ay1 - by0


def _clear_room(body: _Body, room, d) -> float:
    """Smallest shift along ``d`` that brings the footprint inside the room, or inf."""
    x0, y0, x1, y1 = body.foot.bounds
    axis = 0 if d[0] else 1
    sign = d[axis]
    lo, hi = (x0, x1) if axis == 0 else (y0, y1)
    coords = np.unique(np.asarray(room.exterior.coords)[:, axis])
    events = sorted({float(sign * (c - e)) for c in coords for e in (lo, hi)})
    for t in events:
        if t <= 0:
            continue
        moved = _Body(affinity.translate(body.foot, t * d[0], t * d[1]), body.zlo, body.zhi)
        if not _outside(moved, room):
            return t
    return float("inf")


def _placed(obj: RigidObject, target_xy, s):
    v = obj.mesh.vertices
    z0 = v[:, 2].min()
    out = np.empty_like(v)
    out[:, :2] = (v[:, :2] - obj.centroid) * s + target_xy
    out[:, 2] = (v[:, 2] - z0) * s + z0
    return out


def place_objects(objects, corr: OutlineCorrespondence, scale: float = METERS_PER_UNIT):
    """Translate every object to the image of its centroid and resolve collisions.

    Objects are placed one by one in label order; placed objects and the
    target outline are the obstacles.  A collision is pushed out along the
    shortest axis move that leaves the object clear of everything.  When no
    such move exists the object shrinks by 5% about its base centre and
    tries again.
    Returns the placed vertex arrays and one Placement per object.
    """
    room = Polygon(corr.target.vertices * scale)
    src_cage = corr.source_points() * scale
    tgt_cage = corr.target_points() * scale
    placed: list[_Body] = []
    verts, info = [], []
    for obj in objects:
        mapped = cage_map(obj.centroid[None], src_cage, tgt_cage)[0]
        base = footprint(obj.mesh)
        zlo, zhi = float(obj.mesh.vertices[:, 2].min()), float(obj.mesh.vertices[:, 2].max())
        s = 1.0
        while True:
            foot = affinity.translate(affinity.scale(base, s, s, origin=(*obj.centroid, 0.0)),
                                      *(mapped - obj.centroid))
            body = _Body(foot, zlo, zlo + (zhi - zlo) * s)
            bumps = [o for o in placed if _hits(body, o)]
            out = _outside(body, room)
            if not bumps and not out:
                shift, pushed = np.zeros(2), False
                break
            pushes = []
            for d in DIRECTIONS:
                need = [_clear_object(body, o, d) for o in bumps]
                if out:
                    need.append(_clear_room(body, room, d))
                t = max(need)
                if np.isfinite(t):
                    pushes.append((t, d))
            pushes.sort(key=lambda p: p[0])
            for t, d in pushes:
                shift = t * np.array(d)
                moved = _Body(affinity.translate(body.foot, *shift), body.zlo, body.zhi)
                if not _outside(moved, room) and not any(_hits(moved, o) for o in placed):
                    pushed = True
                    break
            else:
                pushed = False
            if pushed:
                break
            if s * SCALE_STEP < MIN_SCALE:
                raise PlacementFailure(obj.label)
            s *= SCALE_STEP
        target = mapped + shift
        placed.append(_Body(affinity.translate(body.foot, *shift), body.zlo, body.zhi))
        verts.append(_placed(obj, target, s))
        info.append(Placement(obj.label, tuple(float(x) for x in target - obj.centroid), float(s), pushed))
    return verts, info


def reinsert_objects(shell: IndexedMesh, objects, corr: OutlineCorrespondence,
                     scale: float = METERS_PER_UNIT) -> tuple[IndexedMesh, list[Placement]]:
    """Shell plus every placed object as one mesh."""
    verts, info = place_objects(objects, corr, scale)
    meshes = [shell] + [o.mesh.with_vertices(v) for o, v in zip(objects, verts)]
    return merge(meshes), info
