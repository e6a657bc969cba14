"""Synthetic room corpus: outlines with doors, labeled meshes, graphs and 2D plans.

Everything is drawn from a numpy Generator so a seed fixes the corpus.
Outlines use integer layout units; meshes are in meters in the outline's
frame (x, y scaled by METERS_PER_UNIT, z up).
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from shapely.geometry import Polygon, box

from .deform.mesh import IndexedMesh, merge, rotate_mesh
from .geom import METERS_PER_UNIT, RectPolygon, maximal_grid
from .model import ROOM_TYPES, FloorPlan, PlacedRoom, RelationGraph, Room, RoomDatabase, portal_from_segment

ROOM_HEIGHT = 2.7
DOOR_HEIGHT = 2.1
DOOR_WIDTH = (12, 16)
CORNER_MARGIN = 4
FLOOR_CELL = 12.0

FURNITURE = {
    "bedroom": [("bed", 2.0, 1.6, 0.5), ("wardrobe", 1.2, 0.6, 2.0), ("nightstand", 0.5, 0.5, 0.5), ("desk", 1.2, 0.6, 0.75)],
    "living_room": [("sofa", 2.2, 0.9, 0.8), ("table", 1.2, 0.7, 0.45), ("armchair", 0.9, 0.9, 0.8), ("shelf", 1.6, 0.4, 1.8)],
    "kitchen": [("counter", 2.0, 0.6, 0.9), ("table", 1.2, 0.8, 0.75), ("fridge", 0.7, 0.7, 1.8), ("stool", 0.4, 0.4, 0.65)],
    "bathroom": [("bathtub", 1.6, 0.75, 0.55), ("sink", 0.6, 0.5, 0.85), ("toilet", 0.4, 0.65, 0.75), ("cabinet", 0.5, 0.35, 1.2)],
    "balcony": [("chair", 0.5, 0.5, 0.9), ("table", 0.7, 0.7, 0.7), ("plant", 0.4, 0.4, 1.0), ("bench", 1.2, 0.4, 0.45)],
    "storage": [("rack", 1.2, 0.5, 2.0), ("box", 0.6, 0.6, 0.6), ("cabinet", 0.8, 0.5, 1.6), ("crate", 0.5, 0.5, 0.5)],
}


# --- outlines and doors ---------------------------------------------------------


def random_outline(rng: np.random.Generator, size=(44, 88), l_shape: float = 0.3) -> RectPolygon:
    w, h = (int(v) for v in rng.integers(size[0], size[1] + 1, 2))
    if rng.random() >= l_shape:
        return RectPolygon([(0, 0), (w, 0), (w, h), (0, h)])
    nw = int(rng.integers(w // 3, w // 2 + 1))
    nh = int(rng.integers(h // 3, h // 2 + 1))
    corner = int(rng.integers(4))
    pts = {
        0: [(nw, 0), (w, 0), (w, h), (0, h), (0, nh), (nw, nh)],
        1: [(0, 0), (w - nw, 0), (w - nw, nh), (w, nh), (w, h), (0, h)],
        2: [(0, 0), (w, 0), (w, h - nh), (w - nw, h - nh), (w - nw, h), (0, h)],
        3: [(0, 0), (w, 0), (w, h), (nw, h), (nw, h - nh), (0, h - nh)],
    }[corner]
    return RectPolygon(pts)


def _name_portals(portals):
    portals = sorted(portals, key=lambda p: p.mid)
    return tuple(type(p)(p.mid, p.length, p.facing, p.wall, p.pair_id, f"p{k}") for k, p in enumerate(portals))


def add_doors(outline: RectPolygon, count: int, rng: np.random.Generator) -> tuple:
    """``count`` doors on distinct walls when possible, never closer than a margin to a corner."""
    lengths = outline.edge_lengths
    walls = [k for k in range(len(outline)) if lengths[k] >= DOOR_WIDTH[1] + 2 * CORNER_MARGIN]
    if not walls:
        raise ValueError("outline has no wall long enough for a door")
    chosen = [int(k) for k in rng.permutation(walls)[:count]]
    while len(chosen) < count:
        chosen.append(int(walls[int(rng.integers(len(walls)))]))
    segs: dict[int, list] = {}
    portals = []
    for k in chosen:
        width = int(rng.integers(DOOR_WIDTH[0], DOOR_WIDTH[1] + 1))
        a, b = outline.edge(k)
        length = float(lengths[k])
        for _ in range(100):
            off = int(rng.integers(CORNER_MARGIN, int(length) - CORNER_MARGIN - width + 1))
            if all(off + width + 2 <= s or off >= e + 2 for s, e in segs.get(k, [])):
                break
        else:
            raise ValueError("no room for another door on this wall")
        segs.setdefault(k, []).append((off, off + width))
        d = (b - a) / length
        portals.append(portal_from_segment(outline, a + d * off, a + d * (off + width)))
    return _name_portals(portals)


def synth_room(rid: str, rtype: str, degree: int, rng: np.random.Generator) -> Room:
    for _ in range(50):
        outline = random_outline(rng)
        try:
            return Room(rid, rtype, outline, add_doors(outline, degree, rng), mesh_ref=f"{rid}.obj")
        except ValueError:
            continue
    raise RuntimeError(f"could not place {degree} doors in room {rid}")


# --- meshes -----------------------------------------------------------------------


def _quad(p0, p1, z0, z1):
    v = [(*p0, z0), (*p1, z0), (*p1, z1), (*p0, z1)]
    return v, [(0, 1, 2), (0, 2, 3)]


def _piece(vertices, faces, label):
    return IndexedMesh(np.array(vertices, float).reshape(-1, 3), np.array(faces, np.int64).reshape(-1, 3),
                       [label] * len(faces))


def _slab(outline: RectPolygon, z: float, label: str, up: bool, scale: float) -> IndexedMesh:
    verts, faces = [], []
    for r in maximal_grid(outline).rects:
        nx = max(1, math.ceil(r.w / FLOOR_CELL))
        ny = max(1, math.ceil(r.h / FLOOR_CELL))
        xs = np.linspace(r.x, r.x + r.w, nx + 1)
        ys = np.linspace(r.y, r.y + r.h, ny + 1)
        base = len(verts)
        for y in ys:
            for x in xs:
                verts.append((x * scale, y * scale, z))
        for j in range(ny):
            for i in range(nx):
                a = base + j * (nx + 1) + i
                b, c, d = a + 1, a + nx + 2, a + nx + 1
                faces += [(a, b, c), (a, c, d)] if up else [(a, c, b), (a, d, c)]
    return _piece(verts, faces, label)


def _walls(room: Room, scale: float) -> IndexedMesh:
    outline = room.outline
    verts, faces = [], []
    for k in range(len(outline)):
        a, b = outline.edge(k)
        length = float(np.linalg.norm(b - a))
        d = (b - a) / length
        doors = sorted((p.endpoints(outline) for p in room.portals if p.wall == k),
                       key=lambda e: float((e[0] - a) @ d))
        cuts = [0.0]
        spans = []
        for p0, p1 in doors:
            s0, s1 = sorted((float((p0 - a) @ d), float((p1 - a) @ d)))
            cuts += [s0, s1]
            spans.append((s0, s1))
        cuts.append(length)
        for s0, s1 in zip(cuts[:-1], cuts[1:]):
            if s1 - s0 <= 0:
                continue
            door = any(abs(s0 - ds) < 1e-12 and abs(s1 - de) < 1e-12 for ds, de in spans)
            z0 = DOOR_HEIGHT if door else 0.0
            p0 = (a + d * s0) * scale if s0 > 0 else a * scale
            p1 = (a + d * s1) * scale if s1 < length else b * scale
            v, f = _quad(p0, p1, z0, ROOM_HEIGHT)
            base = len(verts)
            verts += v
            faces += [tuple(base + i for i in t) for t in f]
    return _piece(verts, faces, "wall.0")


def _box(cx, cy, w, d, h, label) -> IndexedMesh:
    x0, x1, y0, y1 = cx - w / 2, cx + w / 2, cy - d / 2, cy + d / 2
    v = [(x0, y0, 0), (x1, y0, 0), (x1, y1, 0), (x0, y1, 0), (x0, y0, h), (x1, y0, h), (x1, y1, h), (x0, y1, h)]
    f = [(0, 2, 1), (0, 3, 2), (4, 5, 6), (4, 6, 7), (0, 1, 5), (0, 5, 4),
         (1, 2, 6), (1, 6, 5), (2, 3, 7), (2, 7, 6), (3, 0, 4), (3, 4, 7)]
    return _piece(v, f, label)


def furnish(room: Room, rng: np.random.Generator, count: int = 3, scale: float = METERS_PER_UNIT,
            clearance: float = 0.3) -> list[IndexedMesh]:
    """``count`` axis-aligned furniture boxes, clear of the walls and of each other."""
    floor = Polygon(room.outline.vertices * scale).buffer(-clearance, join_style=2)
    x0, y0, x1, y1 = floor.bounds
    catalog = FURNITURE[room.room_type]
    order = [catalog[i] for i in rng.permutation(len(catalog))[:count]]
    boxes, out = [], []
    for inst, (name, w, d, h) in enumerate(order, start=1):
        shrink = 1.0
        while True:
            if rng.random() < 0.5:
                w, d = d, w
            for _ in range(200):
                cx = float(rng.uniform(x0 + w * shrink / 2, x1 - w * shrink / 2)) if x1 - x0 > w * shrink else (x0 + x1) / 2
                cy = float(rng.uniform(y0 + d * shrink / 2, y1 - d * shrink / 2)) if y1 - y0 > d * shrink else (y0 + y1) / 2
                b = box(cx - w * shrink / 2, cy - d * shrink / 2, cx + w * shrink / 2, cy + d * shrink / 2)
                if b.within(floor) and all(b.distance(o) >= clearance for o in boxes):
                    break
            else:
                shrink *= 0.8
                if shrink < 0.1:
                    raise RuntimeError(f"cannot furnish room {room.id}")
                continue
            break
        boxes.append(b)
        out.append(_box(cx, cy, w * shrink, d * shrink, h, f"{name}.{inst}"))
    return out


def room_mesh(room: Room, rng: np.random.Generator, objects: int = 3, scale: float = METERS_PER_UNIT) -> IndexedMesh:
    parts = [_slab(room.outline, 0.0, "floor.0", True, scale),
             _slab(room.outline, ROOM_HEIGHT, "ceiling.0", False, scale),
             _walls(room, scale)]
    parts += furnish(room, rng, objects, scale)
    return merge(parts)


def mesh_for(room: Room, base: Room, base_mesh: IndexedMesh, scale: float = METERS_PER_UNIT) -> IndexedMesh:
    """Mesh of a rotated database entry from the mesh of its unrotated room."""
    return rotate_mesh(base_mesh, base.outline, (room.rotation - base.rotation) // 90, scale)


# --- database ----------------------------------------------------------------------


def synth_database(seed: int = 0, extra: int = 12) -> tuple[RoomDatabase, dict[str, IndexedMesh]]:
    """One room per (type, degree 1..3) plus ``extra`` random rooms, each with a furnished mesh."""
    rng = np.random.default_rng(seed)
    specs = [(t, d) for t in ROOM_TYPES for d in (1, 2, 3)]
    specs += [(ROOM_TYPES[int(rng.integers(len(ROOM_TYPES)))], int(rng.integers(1, 4))) for _ in range(extra)]
    rooms, meshes = [], {}
    for k, (t, d) in enumerate(specs):
        rid = f"room{k:02d}"
        room = synth_room(rid, t, d, rng)
        rooms.append(room)
        meshes[rid] = room_mesh(room, rng)
    return RoomDatabase(rooms), meshes


def raw_record(room: Room) -> dict:
    """The annotated record ``ingest_room`` turns back into ``room``."""
    portals = []
    for p in room.portals:
        a, b = p.endpoints(room.outline)
        d = {"a": a.tolist(), "b": b.tolist()}
        if p.pair_id is not None:
            d["neighbor"] = p.pair_id
        portals.append(d)
    return {"id": room.id, "type": room.room_type, "outline": room.outline.vertices.tolist(),
            "portals": portals, "mesh": room.mesh_ref}


# --- graphs and 2D plans ---------------------------------------------------------------


def random_tree(n: int, rng: np.random.Generator, max_degree: int = 3, types=ROOM_TYPES) -> RelationGraph:
    """Random labeled tree on nodes n0..n{n-1}, every degree at most ``max_degree``."""
    nodes = {f"n{i}": str(types[int(rng.integers(len(types)))]) for i in range(n)}
    deg = [0] * n
    edges = []
    for i in range(1, n):
        open_ = [j for j in range(i) if deg[j] < max_degree]
        j = open_[int(rng.integers(len(open_)))]
        edges.append((f"n{j}", f"n{i}"))
        deg[i] += 1
        deg[j] += 1
    return RelationGraph(nodes, edges)


def _guillotine(rect, n, rng):
    parts = [rect]
    while len(parts) < n:
        k = max(range(len(parts)), key=lambda i: (parts[i][2] * parts[i][3], -i))
        x, y, w, h = parts.pop(k)
        if w >= h:
            c = int(round(w * rng.uniform(0.35, 0.65)))
            parts += [(x, y, c, h), (x + c, y, w - c, h)]
        else:
            c = int(round(h * rng.uniform(0.35, 0.65)))
            parts += [(x, y, w, c), (x, y + c, w, h - c)]
    return parts


def _shared(a, b):
    """Shared wall of two touching rects as ((p0, p1), facing from a), or None."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    if ax + aw == bx or bx + bw == ax:
        x = bx if ax + aw == bx else ax
        lo, hi = max(ay, by), min(ay + ah, by + bh)
        if hi > lo:
            return ((x, lo), (x, hi)), "right" if ax + aw == bx else "left"
    if ay + ah == by or by + bh == ay:
        y = by if ay + ah == by else ay
        lo, hi = max(ax, bx), min(ax + aw, bx + bw)
        if hi > lo:
            return ((lo, y), (hi, y)), "down" if ay + ah == by else "up"
    return None


def synth_target_plan(n: int, rng: np.random.Generator, size=(176, 132), max_degree: int = 3) -> FloorPlan:
    """Rectangle split into ``n`` rooms, doors along a random spanning tree of shared walls."""
    need = DOOR_WIDTH[1] + 2 * CORNER_MARGIN
    for _ in range(100):
        rects = _guillotine((0, 0, *size), n, rng)
        cand = []
        for i, j in itertools.combinations(range(n), 2):
            s = _shared(rects[i], rects[j])
            if s is not None:
                (p0, p1), _ = s
                if max(abs(p1[0] - p0[0]), abs(p1[1] - p0[1])) >= need:
                    cand.append((i, j, s[0]))
        order = [cand[k] for k in rng.permutation(len(cand))]
        comp = list(range(n))

        def find(a):
            while comp[a] != a:
                a = comp[a]
            return a

        deg = [0] * n
        tree = []
        for i, j, seg in order:
            if find(i) != find(j) and deg[i] < max_degree and deg[j] < max_degree:
                comp[find(i)] = find(j)
                deg[i] += 1
                deg[j] += 1
                tree.append((i, j, seg))
        if len(tree) == n - 1:
            break
    else:
        raise RuntimeError("could not build a connected plan")
    doors: dict[int, list] = {i: [] for i in range(n)}
    for e, (i, j, (p0, p1)) in enumerate(tree):
        p0, p1 = np.array(p0, float), np.array(p1, float)
        length = float(np.linalg.norm(p1 - p0))
        width = int(rng.integers(DOOR_WIDTH[0], DOOR_WIDTH[1] + 1))
        off = int(rng.integers(CORNER_MARGIN, int(length) - CORNER_MARGIN - width + 1))
        d = (p1 - p0) / length
        seg = (p0 + d * off, p0 + d * (off + width))
        doors[i].append((e, seg))
        doors[j].append((e, seg))
    types = [str(ROOM_TYPES[int(rng.integers(len(ROOM_TYPES)))]) for _ in range(n)]
    rooms = []
    for i, (x, y, w, h) in enumerate(rects):
        outline = RectPolygon([(x, y), (x + w, y), (x + w, y + h), (x, y + h)])
        ps = [portal_from_segment(outline, a, b, f"e{e}") for e, (a, b) in doors[i]]
        rooms.append(Room(f"t{i}", types[i], outline, _name_portals(ps)))
    index = {}
    for i, r in enumerate(rooms):
        for k, p in enumerate(r.portals):
            index.setdefault(p.pair_id, []).append((i, k))
    pairings = [tuple(index[f"e{e}"]) for e in range(len(tree))]
    graph = RelationGraph({f"n{i}": types[i] for i in range(n)},
                          [(f"n{i}", f"n{j}") for i, j, _ in tree])
    return FloorPlan([PlacedRoom(r, 0.0, 0.0, f"n{i}") for i, r in enumerate(rooms)], pairings, graph)
