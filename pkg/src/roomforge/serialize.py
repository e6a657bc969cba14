"""JSON documents for rooms, databases, floor plans and relation graphs.

All writers emit canonical JSON (sorted keys, fixed float formatting) so
identical inputs give byte-identical files.  Derived documents round
floats to 9 significant digits; geometry documents keep them exact.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .geom import GeometryError, RectPolygon
from .model import (
    FloorPlan,
    ModelError,
    PlacedRoom,
    Portal,
    RelationGraph,
    Room,
    RoomDatabase,
    canonical_type,
    validate,
)

ROOMDB = "roomdb/1"
FLOORPLAN = "floorplan/1"
RELGRAPH = "relgraph/1"
ASSIGNMENT = "assignment/1"
DEFORMED = "deformed/1"


class DocumentError(ValueError):
    """Malformed document, wrong schema version, or invariant violation."""


_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_portal = {
    "type": "object",
    "required": ["mid", "len", "facing"],
    "properties": {
        "mid": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "len": {"type": "number", "exclusiveMinimum": 0},
        "facing": {"enum": ["up", "down", "left", "right"]},
        "pair_hint": {"type": ["string", "null"]},
        "name": {"type": "string"},
    },
}
_room = {
    "type": "object",
    "required": ["id", "type", "outline", "portals"],
    "properties": {
        "id": {"type": "string"},
        "type": {"type": "string"},
        "outline": {"type": "array", "items": _point, "minItems": 4},
        "portals": {"type": "array", "items": _portal},
        "mesh": {"type": ["string", "null"]},
        "rotation": {"enum": [0, 90, 180, 270]},
    },
}
SCHEMAS = {
    ROOMDB: {
        "type": "object",
        "required": ["schema", "rooms"],
        "properties": {
            "schema": {"const": ROOMDB},
            "augmented": {"type": "boolean"},
            "rooms": {"type": "array", "items": _room},
        },
    },
    RELGRAPH: {
        "type": "object",
        "required": ["schema", "nodes", "edges"],
        "properties": {
            "schema": {"const": RELGRAPH},
            "nodes": {"type": "array", "items": {
                "type": "object", "required": ["id", "type"],
                "properties": {"id": {"type": "string"}, "type": {"type": "string"}}}},
            "edges": {"type": "array", "items": {
                "type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2}},
        },
    },
    FLOORPLAN: {
        "type": "object",
        "required": ["schema", "rooms", "pairings"],
        "properties": {
            "schema": {"const": FLOORPLAN},
            "rooms": {"type": "array", "items": {
                "type": "object",
                "required": ["room_id", "dx", "dy"],
                "properties": {
                    "room_id": {"type": "string"},
                    "dx": {"type": "number"},
                    "dy": {"type": "number"},
                    "node": {"type": ["string", "null"]},
                    "type": {"type": "string"},
                    "outline": {"type": "array", "items": _point, "minItems": 4},
                    "portals": {"type": "array", "items": _portal},
                    "rotation": {"enum": [0, 90, 180, 270]},
                    "mesh": {"type": ["string", "null"]},
                },
            }},
            "pairings": {"type": "array", "items": {
                "type": "array", "minItems": 2, "maxItems": 2,
                "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                          "minItems": 2, "maxItems": 2}}},
        },
    },
}


FLOAT_DIGITS = 9
# geometry documents keep exact floats: rounding to 9 digits can open
# overlaps larger than the validator tolerance along long shared walls
GEOMETRY_DIGITS = None


def _plain(obj: Any, digits: int | None = FLOAT_DIGITS) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist(), digits)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)) and not isinstance(obj, bool):
        x = float(obj) if digits is None else float(f"{float(obj):.{digits}g}")
        return 0.0 if x == 0 else x  # fold -0.0
    return obj


def canonical_json(obj: Any, digits: int | None = FLOAT_DIGITS) -> str:
    """Sorted keys, one space indent; floats rounded to ``digits`` significant digits (None keeps them exact)."""
    return json.dumps(_plain(obj, digits), sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def canonical_line(obj: Any) -> str:
    """One compact canonical JSON line (for JSON-lines logs)."""
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def write_json(path, obj, digits: int | None = FLOAT_DIGITS) -> None:
    Path(path).write_text(canonical_json(obj, digits), encoding="utf-8")


def check_schema(doc: Any, schema: str) -> None:
    if not isinstance(doc, dict):
        raise DocumentError("document is not a JSON object")
    if doc.get("schema") != schema:
        raise DocumentError(f"schema mismatch: expected {schema!r}, got {doc.get('schema')!r}")
    try:
        jsonschema.validate(doc, SCHEMAS[schema])
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise DocumentError(f"{where}: {e.message}") from None


# --- rooms -------------------------------------------------------------------


def portal_to_doc(p: Portal) -> dict:
    d = {"mid": p.mid, "len": p.length, "facing": p.facing, "name": p.name}
    if p.pair_id is not None:
        d["pair_hint"] = p.pair_id
    return d


def portal_from_doc(d: dict, outline: RectPolygon, index: int) -> Portal:
    wall = outline.edge_at(d["mid"])
    return Portal(float(d["mid"]), float(d["len"]), d["facing"], wall, d.get("pair_hint"),
                  d.get("name", f"p{index}"))


def room_to_doc(r: Room) -> dict:
    d = {
        "id": r.id,
        "type": r.room_type,
        "outline": r.outline.vertices.tolist(),
        "portals": [portal_to_doc(p) for p in r.portals],
        "rotation": r.rotation,
    }
    if r.mesh_ref is not None:
        d["mesh"] = r.mesh_ref
    return d


def room_from_doc(d: dict) -> Room:
    rid = d.get("id")
    try:
        outline = RectPolygon(d["outline"])
        portals = [portal_from_doc(p, outline, i) for i, p in enumerate(d["portals"])]
        return Room(str(rid), canonical_type(d["type"]), outline, tuple(portals),
                    d.get("mesh"), int(d.get("rotation", 0)))
    except (GeometryError, ModelError) as e:
        raise DocumentError(f"room {rid!r}: {e}") from None


def database_to_doc(db: RoomDatabase) -> dict:
    return {"schema": ROOMDB, "augmented": db.augmented, "rooms": [room_to_doc(r) for r in db]}


def database_from_doc(doc: dict) -> RoomDatabase:
    check_schema(doc, ROOMDB)
    rooms = [room_from_doc(d) for d in doc["rooms"]]
    try:
        return RoomDatabase(rooms, augmented=bool(doc.get("augmented", False)))
    except ModelError as e:
        raise DocumentError(str(e)) from None


# --- graphs ------------------------------------------------------------------


def graph_to_doc(g: RelationGraph) -> dict:
    return {
        "schema": RELGRAPH,
        "nodes": [{"id": k, "type": v} for k, v in g.nodes.items()],
        "edges": [list(e) for e in g.edges],
    }


def graph_from_doc(doc: dict) -> RelationGraph:
    check_schema(doc, RELGRAPH)
    try:
        return RelationGraph({n["id"]: n["type"] for n in doc["nodes"]}, [tuple(e) for e in doc["edges"]])
    except ModelError as e:
        raise DocumentError(str(e)) from None


# --- floor plans -------------------------------------------------------------


def plan_to_doc(fp: FloorPlan) -> dict:
    rooms = []
    for pr in fp.rooms:
        d = room_to_doc(pr.room)
        d["room_id"] = d.pop("id")
        d.update(dx=pr.dx, dy=pr.dy, node=pr.node)
        rooms.append(d)
    doc = {
        "schema": FLOORPLAN,
        "rooms": rooms,
        "pairings": [[list(p), list(q)] for p, q in fp.pairings],
    }
    if fp.graph is not None:
        doc["graph"] = graph_to_doc(fp.graph)
    return doc


def plan_from_doc(doc: dict, db: RoomDatabase | None = None, check: bool = True) -> FloorPlan:
    """Load a plan; rooms without inline geometry are resolved through ``db``."""
    check_schema(doc, FLOORPLAN)
    placed = []
    for k, d in enumerate(doc["rooms"]):
        if "outline" in d:
            if "type" not in d or "portals" not in d:
                raise DocumentError(f"rooms/{k}: inline geometry needs 'type' and 'portals'")
            room = room_from_doc({**d, "id": d["room_id"]})
        elif db is not None and d["room_id"] in db:
            room = db[d["room_id"]]
        else:
            raise DocumentError(f"rooms/{k}: 'outline' is a required property (room {d['room_id']!r} not in database)")
        placed.append(PlacedRoom(room, float(d["dx"]), float(d["dy"]), d.get("node")))
    pairings = [(tuple(p), tuple(q)) for p, q in doc["pairings"]]
    graph = graph_from_doc(doc["graph"]) if "graph" in doc else None
    fp = FloorPlan(placed, pairings, graph)
    if check:
        bad = validate(fp)
        if bad:
            raise DocumentError("floor plan violates invariants: " + "; ".join(map(str, bad)))
    return fp


# --- file helpers ------------------------------------------------------------


def _read(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DocumentError(f"{path}: not valid JSON ({e})") from None


def save_database(db: RoomDatabase, path) -> None:
    write_json(path, database_to_doc(db), GEOMETRY_DIGITS)


def load_database(path) -> RoomDatabase:
    return database_from_doc(_read(path))


def save_plan(fp: FloorPlan, path) -> None:
    write_json(path, plan_to_doc(fp), GEOMETRY_DIGITS)


def load_plan(path, db: RoomDatabase | None = None, check: bool = True) -> FloorPlan:
    return plan_from_doc(_read(path), db, check)


def save_graph(g: RelationGraph, path) -> None:
    write_json(path, graph_to_doc(g), GEOMETRY_DIGITS)


def load_graph(path) -> RelationGraph:
    return graph_from_doc(_read(path))


# --- correspondences -----------------------------------------------------------


def correspondence_to_doc(c) -> dict:
    w = c.weights
    return {
        "source": c.source.vertices.tolist(),
        "target": c.target.vertices.tolist(),
        "source_params": c.source_params.tolist(),
        "source_corners": [bool(v) for v in c.source_corners],
        "target_params": c.target_params.tolist(),
        "vertical": [bool(v) for v in c.vertical],
        "portal_samples": [list(p) for p in c.portal_samples],
        "portal_intervals": [list(p) for p in c.portal_intervals],
        "weights": {"lam_e": w.lam_e, "lam_n": w.lam_n, "n": w.n},
        "objective": c.objective,
    }


def correspondence_from_doc(d: dict):
    from .deform import CorrespondenceWeights, OutlineCorrespondence

    try:
        return OutlineCorrespondence(
            RectPolygon(d["source"]), RectPolygon(d["target"]),
            np.asarray(d["source_params"], float), np.asarray(d["source_corners"], bool),
            np.asarray(d["target_params"], float), np.asarray(d["vertical"], bool),
            tuple(tuple(p) for p in d["portal_samples"]), tuple(tuple(p) for p in d["portal_intervals"]),
            CorrespondenceWeights(**d["weights"]), float(d["objective"]),
        )
    except (KeyError, TypeError, GeometryError) as e:
        raise DocumentError(f"bad correspondence document: {e}") from None
