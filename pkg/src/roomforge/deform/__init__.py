"""Fit a retrieved room mesh to a target outline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geom import METERS_PER_UNIT, RectPolygon
from ..model import Room
from .correspond import (
    CorrespondenceError,
    CorrespondenceWeights,
    OutlineCorrespondence,
    PortalPair,
    correspond,
)
from .mesh import SHELL_LABELS, IndexedMesh, MeshError, merge, parse_obj, read_obj, rotate_mesh, write_obj
from .rigid import Placement, PlacementFailure, RigidObject, place_objects, reinsert_objects, split_rigid
from .shell import CageError, SnapError, cage_map, deform_shell, snap_portals


@dataclass(frozen=True)
class DeformResult:
    mesh: IndexedMesh
    correspondence: OutlineCorrespondence
    placements: tuple[Placement, ...]
    mapped_portals: np.ndarray     # cage image of each source portal midpoint (layout units)
    snapped_portals: np.ndarray    # final portal midpoints (layout units)


def deform_room(room: Room, mesh: IndexedMesh, target_outline: RectPolygon, target_portals,
                w: CorrespondenceWeights = CorrespondenceWeights(),
                scale: float = METERS_PER_UNIT) -> DeformResult:
    """split_rigid, correspond, deform_shell, snap_portals and object reinsertion in one go.

    ``target_portals[i]`` is where ``room.portals[i]`` must end up on the
    target outline.  The mesh is in the room's outline frame (meters); the
    output is in the target outline's frame.  Faces keep their order.
    """
    target_portals = tuple(target_portals)
    if len(target_portals) != len(room.portals):
        raise ValueError("one target portal per room portal required")
    split = split_rigid(mesh)
    pairs = [PortalPair(p, q) for p, q in zip(room.portals, target_portals)]
    corr = correspond(room.outline, target_outline, pairs, w)
    shell = deform_shell(split.shell, corr, scale)
    shell = snap_portals(shell, corr, target_portals, scale)
    placed, info = place_objects(split.objects, corr, scale)
    v = mesh.vertices.copy()
    v[split.shell_ids] = shell.vertices
    for obj, pv in zip(split.objects, placed):
        v[obj.vertex_ids] = pv
    src_mids = np.array([p.midpoint(room.outline) for p in room.portals]).reshape(-1, 2)
    mapped = cage_map(src_mids, corr.source_points(), corr.target_points())
    snapped = np.array([q.midpoint(target_outline) for q in target_portals]).reshape(-1, 2)
    return DeformResult(mesh.with_vertices(v), corr, tuple(info), mapped, snapped)


__all__ = [
    "CageError",
    "CorrespondenceError",
    "CorrespondenceWeights",
    "DeformResult",
    "IndexedMesh",
    "MeshError",
    "OutlineCorrespondence",
    "Placement",
    "PlacementFailure",
    "PortalPair",
    "RigidObject",
    "SHELL_LABELS",
    "SnapError",
    "cage_map",
    "correspond",
    "deform_room",
    "deform_shell",
    "merge",
    "parse_obj",
    "place_objects",
    "read_obj",
    "reinsert_objects",
    "rotate_mesh",
    "snap_portals",
    "split_rigid",
    "write_obj",
]
