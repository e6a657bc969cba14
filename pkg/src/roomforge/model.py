"""Rooms, portals, floor plans, relation graphs and the room database."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from shapely.geometry import Polygon, box
from shapely.ops import unary_union

from .geom import (
    OPPOSITE,
    GeometryError,
    RectPolygon,
    rotate_facing,
)

ROOM_TYPES = ("living_room", "bedroom", "kitchen", "bathroom", "balcony", "storage")
ROTATIONS = (0, 90, 180, 270)

OVERLAP_TOL = 1e-6
ALIGN_TOL = 1e-6


class ModelError(ValueError):
    """Invalid room, plan or graph data."""


class IngestError(ModelError):
    def __init__(self, room_id, reason: str):
        super().__init__(f"room {room_id!r}: {reason}")
        self.room_id = room_id
        self.reason = reason


def canonical_type(label: str) -> str:
    key = label.strip().lower().replace("-", "_").replace(" ", "_")
    if key not in ROOM_TYPES:
        raise ModelError(f"unsupported room type {label!r}")
    return key


@dataclass(frozen=True)
class Portal:
    """Opening on a room wall, stored in the room's unit outline parameter.

    ``length`` is a fraction of the perimeter; ``name`` is stable under
    re-sorting so a portal can be tracked through layout edits.
    """

    mid: float
    length: float
    facing: str
    wall: int
    pair_id: str | None = None
    name: str = ""

    def interval(self) -> tuple[float, float]:
        return self.mid - self.length / 2, self.mid + self.length / 2

    def endpoints(self, outline: RectPolygon) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.interval()
        u0, u1 = outline.edge_interval(self.wall)
        a, b = outline.edge(self.wall)
        span = u1 - u0
        return a + (b - a) * (lo - u0) / span, a + (b - a) * (hi - u0) / span

    def midpoint(self, outline: RectPolygon) -> np.ndarray:
        a, b = self.endpoints(outline)
        return (a + b) / 2

    def abs_length(self, outline: RectPolygon) -> float:
        return self.length * outline.perimeter


def portal_from_segment(outline: RectPolygon, a, b, pair_id=None, name="", tol=1e-6) -> Portal:
    """Build a portal from two points lying on one wall of ``outline``."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    ua, ka, da = outline.locate(a)
    ub, kb, db = outline.locate(b)
    mid_u, km, dm = outline.locate((a + b) / 2)
    if max(da, db, dm) > tol:
        raise GeometryError("portal endpoints are off the outline")
    u0, u1 = outline.edge_interval(km)
    s0, s1 = u0 * outline.perimeter, u1 * outline.perimeter
    sa = outline.cumulative[km] + np.linalg.norm(a - outline.edge(km)[0])
    sb = outline.cumulative[km] + np.linalg.norm(b - outline.edge(km)[0])
    if not (s0 - tol <= min(sa, sb) and max(sa, sb) <= s1 + tol):
        raise GeometryError("portal spans more than one wall")
    length = float(np.linalg.norm(b - a)) / outline.perimeter
    mid = float((sa + sb) / 2 / outline.perimeter)
    return Portal(mid, length, outline.edge_facing(km), km, pair_id, name)


def _check_portal(outline: RectPolygon, p: Portal, tol=1e-9):
    if not 0 <= p.wall < len(outline):
        raise ModelError(f"portal wall index {p.wall} out of range")
    u0, u1 = outline.edge_interval(p.wall)
    lo, hi = p.interval()
    if p.length <= 0 or lo < u0 - tol or hi > u1 + tol:
        raise ModelError(f"portal {p.name or p.mid} does not lie within wall {p.wall}")
    if p.facing != outline.edge_facing(p.wall):
        raise ModelError(f"portal {p.name or p.mid} facing {p.facing} is not the wall normal")


@dataclass(frozen=True)
class Room:
    id: str
    room_type: str
    outline: RectPolygon
    portals: tuple[Portal, ...] = ()
    mesh_ref: str | None = None
    rotation: int = 0

    def __post_init__(self):
        if self.room_type not in ROOM_TYPES:
            raise ModelError(f"room {self.id!r}: unsupported room type {self.room_type!r}")
        if self.rotation not in ROTATIONS:
            raise ModelError(f"room {self.id!r}: rotation {self.rotation} not a quarter turn")
        object.__setattr__(self, "portals", tuple(self.portals))
        mids = [p.mid for p in self.portals]
        if any(b <= a for a, b in zip(mids, mids[1:])):
            raise ModelError(f"room {self.id!r}: portal params must be strictly increasing")
        for p in self.portals:
            _check_portal(self.outline, p)

    @property
    def area(self) -> float:
        return self.outline.area

    @property
    def base_id(self) -> str:
        return self.id.split("@")[0]

    def portal_index(self, name: str) -> int:
        for i, p in enumerate(self.portals):
            if p.name == name:
                return i
        raise KeyError(name)

    def translated(self, dx: float, dy: float) -> "Room":
        """Same room with outline moved; portal params are translation invariant."""
        return replace(self, outline=self.outline.translated(dx, dy))

    def with_outline(self, outline: RectPolygon, segments: Sequence[tuple]) -> "Room":
        """Rebuild on a new outline from absolute portal segments (same order)."""
        portals = [portal_from_segment(outline, a, b, p.pair_id, p.name)
                   for p, (a, b) in zip(self.portals, segments)]
        portals.sort(key=lambda p: p.mid)
        return replace(self, outline=outline, portals=tuple(portals))


def rotate_room(room: Room, quarter_turns: int, new_id: str | None = None) -> Room:
    """Rotate clockwise on screen; the bounding-box corner stays fixed."""
    q = quarter_turns % 4
    verts = room.outline.vertices
    lo = verts.min(axis=0)

    def rot(p):
        p = np.asarray(p, float)
        for _ in range(q):
            p = np.stack([-p[..., 1], p[..., 0]], axis=-1)
        return p

    shift = lo - rot(verts).min(axis=0)
    outline = RectPolygon(rot(verts) + shift)
    portals = []
    for p in room.portals:
        a, b = p.endpoints(room.outline)
        np_ = portal_from_segment(outline, rot(a) + shift, rot(b) + shift, p.pair_id, p.name)
        assert np_.facing == rotate_facing(p.facing, q)
        portals.append(np_)
    portals.sort(key=lambda p: p.mid)
    rotation = (room.rotation + 90 * q) % 360
    return Room(new_id or f"{room.base_id}@{rotation}", room.room_type, outline,
                tuple(portals), room.mesh_ref, rotation)


# --- relation graphs -----------------------------------------------------


@dataclass
class RelationGraph:
    """Room-type nodes joined by unlabeled portal-connection edges."""

    nodes: dict[str, str]
    edges: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        self.nodes = {str(k): canonical_type(v) for k, v in self.nodes.items()}
        canon = []
        for a, b in self.edges:
            a, b = str(a), str(b)
            if a == b:
                raise ModelError(f"self-loop on node {a!r}")
            if a not in self.nodes or b not in self.nodes:
                raise ModelError(f"edge ({a!r}, {b!r}) references an unknown node")
            canon.append((min(a, b), max(a, b)))
        if len(set(canon)) != len(canon):
            raise ModelError("duplicate edge")
        self.edges = sorted(canon)

    def neighbors(self, n: str) -> list[str]:
        out = [b for a, b in self.edges if a == n] + [a for a, b in self.edges if b == n]
        return sorted(out)

    def degree(self, n: str) -> int:
        return sum(n in e for e in self.edges)

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        start = next(iter(sorted(self.nodes)))
        seen = {start}
        todo = deque([start])
        while todo:
            n = todo.popleft()
            for m in self.neighbors(n):
                if m not in seen:
                    seen.add(m)
                    todo.append(m)
        return len(seen) == len(self.nodes)

    def check(self):
        if not self.is_connected():
            raise ModelError("relation graph is disconnected")

    def same_as(self, other: "RelationGraph") -> bool:
        return self.nodes == other.nodes and self.edges == other.edges


# --- floor plans ---------------------------------------------------------


@dataclass
class PlacedRoom:
    room: Room
    dx: float = 0.0
    dy: float = 0.0
    node: str | None = None

    @property
    def outline(self) -> RectPolygon:
        return self.room.outline.translated(self.dx, self.dy)

    def portal_segment(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.room.portals[k].endpoints(self.room.outline)
        t = np.array([self.dx, self.dy])
        return a + t, b + t

    def portal_midpoint(self, k: int) -> np.ndarray:
        a, b = self.portal_segment(k)
        return (a + b) / 2


PortalRef = tuple[int, int]


@dataclass
class FloorPlan:
    rooms: list[PlacedRoom] = field(default_factory=list)
    pairings: list[tuple[PortalRef, PortalRef]] = field(default_factory=list)
    graph: RelationGraph | None = None

    def copy(self) -> "FloorPlan":
        return FloorPlan([replace(r) for r in self.rooms], list(self.pairings), self.graph)

    def room_of_node(self, node: str) -> int | None:
        for i, r in enumerate(self.rooms):
            if r.node == node:
                return i
        return None

    def paired_portals(self) -> set[PortalRef]:
        return {ref for pair in self.pairings for ref in pair}

    def node_ids(self) -> list[str]:
        return [r.node if r.node is not None else f"r{i}" for i, r in enumerate(self.rooms)]


@dataclass(frozen=True)
class Violation:
    kind: str  # overlap | unaligned | facing | area | matching
    subject: tuple
    amount: float = 0.0

    def __str__(self):
        return f"{self.kind} {self.subject} ({self.amount:.3g})"


def _shape(outline: RectPolygon) -> Polygon:
    return Polygon(outline.vertices)


def validate(fp: FloorPlan, overlap_tol=OVERLAP_TOL, align_tol=ALIGN_TOL) -> list[Violation]:
    """List every violated floor-plan invariant; empty means valid."""
    out: list[Violation] = []
    shapes = []
    for i, r in enumerate(fp.rooms):
        a = r.room.outline.area
        if not a > 0:
            out.append(Violation("area", (i,), a))
        shapes.append(_shape(r.outline))
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            if not shapes[i].intersects(shapes[j]):
                continue
            area = shapes[i].intersection(shapes[j]).area
            if area > overlap_tol:
                out.append(Violation("overlap", (i, j), area))
    used: dict[PortalRef, int] = {}
    for k, (p, q) in enumerate(fp.pairings):
        bad = False
        for ref in (p, q):
            ri, pi = ref
            if not (0 <= ri < len(fp.rooms) and 0 <= pi < len(fp.rooms[ri].room.portals)):
                out.append(Violation("matching", (k, ref), 0.0))
                bad = True
            elif ref in used:
                out.append(Violation("matching", (k, ref), 0.0))
            used.setdefault(ref, k)
        if bad:
            continue
        if p[0] == q[0]:
            out.append(Violation("matching", (k, p, q), 0.0))
            continue
        a0, a1 = fp.rooms[p[0]].portal_segment(p[1])
        b0, b1 = fp.rooms[q[0]].portal_segment(q[1])
        gap = min(max(np.linalg.norm(a0 - b0), np.linalg.norm(a1 - b1)),
                  max(np.linalg.norm(a0 - b1), np.linalg.norm(a1 - b0)))
        if gap > align_tol:
            out.append(Violation("unaligned", (k,), float(gap)))
        fa = fp.rooms[p[0]].room.portals[p[1]].facing
        fb = fp.rooms[q[0]].room.portals[q[1]].facing
        if OPPOSITE[fa] != fb:
            out.append(Violation("facing", (k,), 1.0))
    return out


def extract_graph(fp: FloorPlan) -> RelationGraph:
    if validate(fp):
        raise ModelError("cannot extract a graph from an invalid plan")
    ids = fp.node_ids()
    nodes = {ids[i]: r.room.room_type for i, r in enumerate(fp.rooms)}
    edges = [(ids[p[0]], ids[q[0]]) for p, q in fp.pairings]
    return RelationGraph(nodes, edges)


# --- database ------------------------------------------------------------


class RoomDatabase:
    """Immutable room collection indexed by (type, portal count)."""

    def __init__(self, rooms: Iterable[Room], augmented: bool = False):
        self._rooms: dict[str, Room] = {}
        for r in rooms:
            if r.id in self._rooms:
                raise ModelError(f"duplicate room id {r.id!r}")
            self._rooms[r.id] = r
        self.augmented = augmented
        index: dict[tuple[str, int], list[str]] = {}
        for rid in sorted(self._rooms):
            r = self._rooms[rid]
            index.setdefault((r.room_type, len(r.portals)), []).append(rid)
        self._index = {k: tuple(v) for k, v in index.items()}
        if augmented:
            counts: dict[str, int] = {}
            for r in self._rooms.values():
                counts[r.base_id] = counts.get(r.base_id, 0) + 1
            if any(c != 4 for c in counts.values()):
                raise ModelError("augmented database must hold exactly 4 rotations per room")

    def __len__(self):
        return len(self._rooms)

    def __iter__(self):
        return iter(self._rooms[k] for k in sorted(self._rooms))

    def __getitem__(self, rid: str) -> Room:
        return self._rooms[rid]

    def __contains__(self, rid) -> bool:
        return rid in self._rooms

    @property
    def ids(self) -> list[str]:
        return sorted(self._rooms)

    @property
    def index(self) -> dict[tuple[str, int], tuple[str, ...]]:
        return dict(self._index)

    def lookup(self, room_type: str, portal_count: int) -> tuple[str, ...]:
        return self._index.get((room_type, portal_count), ())


def filter_candidates(db: RoomDatabase, room_type: str, portal_count: int) -> list[str]:
    """Ids of rooms with the given type label and portal count."""
    return list(db.lookup(room_type, portal_count))


def augment_rotations(db: RoomDatabase) -> RoomDatabase:
    """Four-way rotational augmentation; every room must be unrotated."""
    if db.augmented or any(r.rotation != 0 for r in db):
        raise ModelError("database is already rotation-augmented")
    rooms = []
    for r in db:
        base = r.base_id
        for q in range(4):
            rooms.append(rotate_room(replace(r, id=base), q, f"{base}@{90 * q}"))
    return RoomDatabase(rooms, augmented=True)


# --- ingestion -----------------------------------------------------------


def _chain_walls(walls, tol, rid) -> list[np.ndarray]:
    segs = [(np.asarray(a, float), np.asarray(b, float)) for a, b in walls]
    if not segs:
        raise IngestError(rid, "unclosed outline: no walls")
    loop = [segs[0][0], segs[0][1]]
    rest = segs[1:]
    while rest:
        end = loop[-1]
        for k, (a, b) in enumerate(rest):
            if np.linalg.norm(a - end) <= tol:
                loop.append(b)
                break
            if np.linalg.norm(b - end) <= tol:
                loop.append(a)
                break
        else:
            raise IngestError(rid, "unclosed outline: walls do not chain")
        rest.pop(k)
    if np.linalg.norm(loop[-1] - loop[0]) > tol:
        raise IngestError(rid, "unclosed outline: loop does not return to its start")
    return loop[:-1]


def _on_segment(p, a, b, tol) -> bool:
    d = b - a
    L2 = float(d @ d)
    t = min(max(float((p - a) @ d) / L2, 0.0), 1.0) if L2 else 0.0
    return float(np.linalg.norm(a + d * t - p)) <= tol


def ingest_room(raw: dict, tol: float = 1e-6) -> Room:
    """Turn an annotated room record into a rectilinear Room.

    ``raw`` holds ``id``, ``type``, either ``walls`` (segment list) or a
    closed ``outline`` loop, and ``portals`` as ``{"a", "b", "neighbor"}``
    segments on walls.
    """
    rid = raw.get("id")
    try:
        room_type = canonical_type(str(raw.get("type", "")))
    except ModelError as e:
        raise IngestError(rid, str(e)) from None
    if "walls" in raw:
        loop = _chain_walls(raw["walls"], tol, rid)
    elif "outline" in raw:
        loop = [np.asarray(p, float) for p in raw["outline"]]
        if len(loop) > 1 and np.linalg.norm(loop[0] - loop[-1]) <= tol:
            loop = loop[:-1]
    else:
        raise IngestError(rid, "record has neither walls nor outline")
    if len(loop) < 3:
        raise IngestError(rid, "unclosed outline: fewer than 3 corners")
    n = len(loop)
    walls = [(loop[i], loop[(i + 1) % n]) for i in range(n)]
    slanted = [abs(a[0] - b[0]) > tol and abs(a[1] - b[1]) > tol for a, b in walls]
    base = Polygon(loop)
    if not base.is_valid:
        raise IngestError(rid, "outline self-intersects")
    boxes = [box(min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1]))
             for (a, b), s in zip(walls, slanted) if s]
    cage = unary_union([base, *boxes]) if boxes else base
    if cage.geom_type != "Polygon" or len(cage.interiors):
        raise IngestError(rid, "rectilinear cage is not a simple polygon")
    try:
        outline = RectPolygon(list(cage.exterior.coords)[:-1])
    except GeometryError as e:
        raise IngestError(rid, f"rectilinear cage invalid: {e}") from None

    kept: dict[object, tuple[float, int, dict]] = {}
    for k, p in enumerate(raw.get("portals", [])):
        a, b = np.asarray(p["a"], float), np.asarray(p["b"], float)
        host = [w for w, (wa, wb) in enumerate(walls) if _on_segment(a, wa, wb, tol) and _on_segment(b, wa, wb, tol)]
        if not host:
            raise IngestError(rid, f"portal {k} is not on a wall")
        if all(slanted[w] for w in host):
            raise IngestError(rid, f"portal {k} lies on a non-rectilinear wall")
        key = p.get("neighbor", ("#", k))
        length = float(np.linalg.norm(b - a))
        if key not in kept or length > kept[key][0]:
            kept[key] = (length, k, p)
    portals = []
    for length, k, p in sorted(kept.values(), key=lambda t: t[1]):
        try:
            portal = portal_from_segment(outline, p["a"], p["b"], p.get("neighbor"), f"p{k}", tol)
        except GeometryError as e:
            raise IngestError(rid, f"portal {k} off-wall after rectilinearization: {e}") from None
        portals.append(portal)
    portals.sort(key=lambda p: p.mid)
    return Room(str(rid), room_type, outline, tuple(portals), raw.get("mesh"), 0)
