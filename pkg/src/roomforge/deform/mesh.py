"""Labeled triangle meshes and OBJ I/O.

Coordinates are meters: x and y follow the plan (y down on screen), z is up.
Every face carries a ``category.instance`` label taken from the OBJ group.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geom import METERS_PER_UNIT, RectPolygon
from ..model import ModelError

SHELL_LABELS = ("floor", "ceiling", "wall", "curtain")
_LABEL = re.compile(r"^([A-Za-z_][A-Za-z0-9_\-]*)\.(\d+)$")


class MeshError(ModelError):
    pass


def split_label(label: str) -> tuple[str, int]:
    m = _LABEL.match(label)
    if not m:
        raise MeshError(f"face label {label!r} is not of the form category.instance")
    return m.group(1).lower(), int(m.group(2))


@dataclass(frozen=True)
class IndexedMesh:
    vertices: np.ndarray
    faces: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(f):
            raise MeshError("one label per face required")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        for lab in set(self.labels):
            split_label(lab)

    def __len__(self):
        return len(self.faces)

    @property
    def categories(self) -> list[str]:
        return [split_label(l)[0] for l in self.labels]

    def face_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def edge_lengths(self) -> np.ndarray:
        """Lengths of the unique undirected edges."""
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e = np.unique(np.sort(e, axis=1), axis=0)
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def cleaned(self, tol: float = 1e-12) -> "IndexedMesh":
        """Drop zero-area faces and unreferenced vertices."""
        keep = self.face_areas() > tol
        return self.select(keep)

    def select(self, mask) -> "IndexedMesh":
        """Sub-mesh of the chosen faces with compacted vertices."""
        mask = np.asarray(mask, bool)
        f = self.faces[mask]
        used = np.unique(f)
        remap = -np.ones(len(self.vertices), dtype=np.int64)
        remap[used] = np.arange(len(used))
        labels = tuple(l for l, m in zip(self.labels, mask) if m)
        return IndexedMesh(self.vertices[used], remap[f] if f.size else f, labels)

    def with_vertices(self, vertices) -> "IndexedMesh":
        return IndexedMesh(np.asarray(vertices, float), self.faces, self.labels)

    def translated(self, dx: float, dy: float, dz: float = 0.0) -> "IndexedMesh":
        return self.with_vertices(self.vertices + np.array([dx, dy, dz]))

    def same_as(self, other: "IndexedMesh", tol: float = 0.0) -> bool:
        return (self.faces.shape == other.faces.shape and np.array_equal(self.faces, other.faces)
                and self.labels == other.labels and self.vertices.shape == other.vertices.shape
                and bool(np.all(np.abs(self.vertices - other.vertices) <= tol)))


def merge(meshes) -> IndexedMesh:
    vs, fs, ls = [], [], []
    off = 0
    for m in meshes:
        vs.append(m.vertices)
        fs.append(m.faces + off)
        ls.extend(m.labels)
        off += len(m.vertices)
    if not vs:
        return IndexedMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), ())
    return IndexedMesh(np.vstack(vs), np.vstack(fs), ls)


def rotate_mesh(mesh: IndexedMesh, outline: RectPolygon, quarter_turns: int,
                scale: float = METERS_PER_UNIT) -> IndexedMesh:
    """Rotate a room mesh exactly as its outline is rotated (bbox corner fixed)."""
    q = quarter_turns % 4
    xy = mesh.vertices[:, :2].copy()
    cage = outline.vertices * scale
    for _ in range(q):
        xy = np.column_stack([-xy[:, 1], xy[:, 0]])
        cage = np.column_stack([-cage[:, 1], cage[:, 0]])
    xy += outline.vertices.min(axis=0) * scale - cage.min(axis=0)
    return mesh.with_vertices(np.column_stack([xy, mesh.vertices[:, 2]]))


# --- OBJ ---------------------------------------------------------------------


def _num(x: float) -> str:
    x = float(x)
    return repr(0.0 if x == 0 else x)


def obj_text(mesh: IndexedMesh) -> str:
    """OBJ with one ``g`` line per run of equally labeled faces."""
    out = [f"v {_num(x)} {_num(y)} {_num(z)}" for x, y, z in mesh.vertices]
    cur = None
    for (a, b, c), lab in zip(mesh.faces, mesh.labels):
        if lab != cur:
            out.append(f"g {lab}")
            cur = lab
        out.append(f"f {a + 1} {b + 1} {c + 1}")
    return "\n".join(out) + "\n"


def write_obj(mesh: IndexedMesh, path) -> None:
    Path(path).write_text(obj_text(mesh))


def parse_obj(text: str, source: str = "<obj>") -> IndexedMesh:
    """Triangles (polygons are fanned) grouped by ``g``/``o`` names; ungrouped faces are rejected."""
    verts, faces, labels = [], [], []
    group = None
    for n, line in enumerate(text.splitlines(), 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshError(f"{source}:{n}: vertex needs three coordinates")
            verts.append([float(t) for t in parts[1:4]])
        elif tag in ("g", "o"):
            group = parts[1] if len(parts) > 1 else None
        elif tag == "f":
            if group is None:
                raise MeshError(f"{source}:{n}: face outside any labeled group")
            idx = []
            for t in parts[1:]:
                k = int(t.split("/")[0])
                idx.append(k - 1 if k > 0 else len(verts) + k)
            if len(idx) < 3:
                raise MeshError(f"{source}:{n}: face needs three vertices")
            for j in range(1, len(idx) - 1):
                faces.append((idx[0], idx[j], idx[j + 1]))
                labels.append(group)
    try:
        mesh = IndexedMesh(np.array(verts, float).reshape(-1, 3), np.array(faces, np.int64).reshape(-1, 3), labels)
    except MeshError as e:
        raise MeshError(f"{source}: {e}") from None
    return mesh.cleaned()


def read_obj(path) -> IndexedMesh:
    return parse_obj(Path(path).read_text(), str(path))
