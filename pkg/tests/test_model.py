import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import make_room, rect_outline, rect_room
from roomforge.geom import METERS_PER_UNIT, RectPolygon
from roomforge.model import (
    FloorPlan,
    IngestError,
    ModelError,
    PlacedRoom,
    RelationGraph,
    Room,
    RoomDatabase,
    augment_rotations,
    extract_graph,
    filter_candidates,
    ingest_room,
    rotate_room,
    validate,
)


def paired_pair(dx=10.0, dy=0.0):
    a = rect_room("a", "bedroom", 10, 10, [("right", 3, 4)])
    b = rect_room("b", "kitchen", 10, 10, [("left", 3, 4)])
    return FloorPlan([PlacedRoom(a, 0, 0, "A"), PlacedRoom(b, dx, dy, "B")], [((0, 0), (1, 0))])


def test_portal_parametrization():
    r = rect_room("a", "bedroom", 10, 10, [("right", 3, 4)])
    p = r.portals[0]
    # right wall covers arc length 10..20 of 40; door occupies 13..17
    assert p.mid == pytest.approx(15 / 40)
    assert p.length == pytest.approx(4 / 40)
    assert p.facing == "right" and p.wall == 1
    a, b = p.endpoints(r.outline)
    assert np.allclose(a, (10, 3)) and np.allclose(b, (10, 7))


def test_room_rejects_bad_data():
    outline = rect_outline(0, 0, 10, 10)
    with pytest.raises(ModelError):
        Room("x", "multi_purpose", outline)
    with pytest.raises(ModelError):
        Room("x", "bedroom", outline, rotation=45)
    r = rect_room("a", "bedroom", 10, 10, [("right", 3, 4)])
    bad = r.portals[0].__class__(r.portals[0].mid, r.portals[0].length, "left", 1)
    with pytest.raises(ModelError):
        Room("x", "bedroom", outline, (bad,))
    spill = r.portals[0].__class__(0.26, 0.04, "right", 1)  # crosses the corner at u=0.25
    with pytest.raises(ModelError):
        Room("x", "bedroom", outline, (spill,))


def test_validate_clean_plan():
    assert validate(paired_pair()) == []


def test_validate_overlap_one_square_unit():
    a = rect_room("a", "bedroom", 10, 10)
    b = rect_room("b", "bedroom", 10, 10)
    rep = validate(FloorPlan([PlacedRoom(a), PlacedRoom(b, 9, 9)]))
    assert len(rep) == 1
    assert rep[0].kind == "overlap" and rep[0].subject == (0, 1)
    assert rep[0].amount == pytest.approx(1.0)


def test_validate_misaligned_pairing():
    rep = validate(paired_pair(dy=0.5))
    assert len(rep) == 1
    assert rep[0].kind == "unaligned" and rep[0].amount == pytest.approx(0.5)


def test_validate_facing_and_matching():
    a = rect_room("a", "bedroom", 10, 10, [("right", 3, 4), ("down", 2, 2)])
    b = rect_room("b", "bedroom", 10, 10, [("left", 3, 4)])
    fp = FloorPlan([PlacedRoom(a), PlacedRoom(b, 10, 0)], [((0, 0), (1, 0)), ((0, 0), (1, 0))])
    kinds = [v.kind for v in validate(fp)]
    assert kinds.count("matching") == 2
    fp = FloorPlan([PlacedRoom(a), PlacedRoom(b, 10, 0)], [((0, 1), (1, 5))])
    assert [v.kind for v in validate(fp)] == ["matching"]


def _oracle_violations(dx, dy):
    """Hand-derived invariants for two 10x10 rooms with a door on the shared wall."""
    ox = max(0.0, min(10, dx + 10) - max(0, dx))
    oy = max(0.0, min(10, dy + 10) - max(0, dy))
    overlap = ox * oy > 1e-6
    # door of A: (10,3)-(10,7); door of B: (dx, dy+3)-(dx, dy+7)
    gap = math.hypot(dx - 10, dy)
    return overlap, gap > 1e-6


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([0.0, 1e-9, -1e-9, 1e-7, -1e-7, 1e-3, -1e-3, 0.5, -2.0]),
       st.sampled_from([0.0, 1e-9, -1e-7, 1e-7, 1e-3, 3.0, -11.0]))
def test_validate_fuzz_agrees_with_oracle(ex, ey):
    dx, dy = 10.0 + ex, ey
    overlap, unaligned = _oracle_violations(dx, dy)
    kinds = {v.kind for v in validate(paired_pair(dx, dy))}
    assert ("overlap" in kinds) == overlap
    assert ("unaligned" in kinds) == unaligned
    assert (kinds == set()) == (not overlap and not unaligned)


def test_ingest_rectilinear_unchanged():
    raw = {"id": "r1", "type": "Bedroom", "outline": [[0, 0], [40, 0], [40, 30], [0, 30]],
           "portals": [{"a": [40, 10], "b": [40, 20], "neighbor": "hall"}]}
    room = ingest_room(raw)
    assert room.outline == rect_outline(0, 0, 40, 30)
    assert room.room_type == "bedroom"
    assert len(room.portals) == 1 and room.portals[0].facing == "right"
    assert room.portals[0].length * room.outline.perimeter == pytest.approx(10)


def test_ingest_keeps_longest_portal_per_neighbor():
    small, large = 0.8 / METERS_PER_UNIT, 1.2 / METERS_PER_UNIT
    raw = {"id": "r2", "type": "kitchen", "outline": [[0, 0], [60, 0], [60, 60], [0, 60]],
           "portals": [
               {"a": [5, 0], "b": [5 + small, 0], "neighbor": "living"},
               {"a": [60, 10], "b": [60, 10 + large], "neighbor": "living"},
               {"a": [10, 60], "b": [20, 60], "neighbor": "bath"},
           ]}
    room = ingest_room(raw)
    assert len(room.portals) == 2
    by_pair = {p.pair_id: p for p in room.portals}
    kept = by_pair["living"]
    assert kept.facing == "right"
    assert kept.length * room.outline.perimeter * METERS_PER_UNIT == pytest.approx(1.2)


def test_ingest_slanted_wall_replaced_by_bounding_box():
    off = 10 * math.tan(math.radians(5))
    raw = {"id": "r3", "type": "bathroom",
           "walls": [[[0, 0], [10, 0]], [[10 + off, 10], [10, 0]], [[10 + off, 10], [0, 10]], [[0, 10], [0, 0]]],
           "portals": [{"a": [2, 0], "b": [5, 0], "neighbor": "hall"}]}
    room = ingest_room(raw)
    # union of the quad and the AABB of the slanted wall is the full box
    assert room.outline.allclose(rect_outline(0, 0, 10 + off, 10))
    assert room.portals[0].facing == "up"


def test_ingest_three_wall_example():
    # right triangle: the hypotenuse AABB covers the whole 10x10 square
    raw = {"id": "t", "type": "storage", "walls": [[[0, 0], [10, 0]], [[10, 0], [0, 10]], [[0, 10], [0, 0]]],
           "portals": [{"a": [0, 2], "b": [0, 4], "neighbor": "x"}]}
    room = ingest_room(raw)
    assert room.outline == rect_outline(0, 0, 10, 10)
    assert room.portals[0].facing == "left"


@pytest.mark.parametrize("raw, reason", [
    ({"id": "u", "type": "bedroom", "walls": [[[0, 0], [10, 0]], [[10, 0], [10, 10]], [[10, 10], [0, 10]]],
      "portals": []}, "unclosed"),
    ({"id": "m", "type": "multi-purpose", "outline": [[0, 0], [1, 0], [1, 1], [0, 1]], "portals": []},
     "unsupported room type"),
    ({"id": "s", "type": "bedroom", "outline": [[0, 0], [10, 0], [11, 10], [0, 10]],
      "portals": [{"a": [10.2, 2], "b": [10.6, 6], "neighbor": "x"}]}, "non-rectilinear"),
    ({"id": "o", "type": "bedroom", "outline": [[0, 0], [10, 0], [10, 10], [0, 10]],
      "portals": [{"a": [5, 5], "b": [6, 5], "neighbor": "x"}]}, "not on a wall"),
])
def test_ingest_errors(raw, reason):
    with pytest.raises(IngestError) as e:
        ingest_room(raw)
    assert reason in str(e.value) and e.value.room_id == raw["id"]


def test_augment_facings_cycle():
    r = rect_room("r", "bedroom", 10, 6, [("up", 2, 3)])
    db = augment_rotations(RoomDatabase([r]))
    assert db.ids == ["r@0", "r@180", "r@270", "r@90"]
    assert [db[f"r@{d}"].portals[0].facing for d in (0, 90, 180, 270)] == ["up", "right", "down", "left"]
    assert db["r@90"].outline == rect_outline(0, 0, 6, 10)


def test_augment_square_same_outline_distinct_params():
    r = rect_room("sq", "bathroom", 8, 8, [("up", 1, 2)])
    db = augment_rotations(RoomDatabase([r]))
    outlines = {db[i].outline for i in db.ids}
    assert len(outlines) == 1
    mids = [db[i].portals[0].mid for i in db.ids]
    assert len(set(np.round(mids, 12))) == 4


def test_rotate_l_room_by_hand():
    l_room = make_room("l", "living_room", [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)],
                       [((0.5, 2), (0.8, 2))])
    r90 = rotate_room(l_room, 1)
    # (x, y) -> (-y, x), then shift so the bounding box stays at the origin
    assert r90.outline == RectPolygon([(2, 0), (2, 2), (1, 2), (1, 1), (0, 1), (0, 0)])
    a, b = r90.portals[0].endpoints(r90.outline)
    assert {tuple(np.round(a, 9)), tuple(np.round(b, 9))} == {(0.0, 0.5), (0.0, 0.8)}
    assert r90.portals[0].facing == "left"


def test_four_quarter_turns_reproduce_original():
    l_room = make_room("l", "living_room", [(0, 0), (5, 0), (5, 3), (2, 3), (2, 7), (0, 7)],
                       [((1, 7), (1.5, 7)), ((5, 1), (5, 2))])
    r = l_room
    for _ in range(4):
        r = rotate_room(r, 1)
    assert r.outline.allclose(l_room.outline)
    for p, q in zip(r.portals, l_room.portals):
        assert p.mid == pytest.approx(q.mid) and p.length == pytest.approx(q.length)
        assert p.facing == q.facing and p.name == q.name


def test_double_augmentation_rejected():
    db = augment_rotations(RoomDatabase([rect_room("r", "bedroom", 4, 4)]))
    with pytest.raises(ModelError):
        augment_rotations(db)
    with pytest.raises(ModelError):
        RoomDatabase([rect_room("r", "bedroom", 4, 4)], augmented=True)


def test_filter_candidates_examples():
    beds = [rect_room(f"b{i}", "bedroom", 10 + i, 10, [("up", 1, 2)]) for i in range(3)]
    db = augment_rotations(RoomDatabase(beds))
    assert len(filter_candidates(db, "bedroom", 1)) == 12
    assert filter_candidates(db, "kitchen", 2) == []


def test_filter_candidates_linear_scan():
    rng = np.random.default_rng(3)
    rooms = []
    sides = ["up", "down", "left", "right"]
    for i in range(10):
        k = int(rng.integers(0, 3))
        doors = [(sides[j], 1, 2) for j in range(k)]
        rooms.append(rect_room(f"r{i}", ["bedroom", "kitchen", "bathroom"][i % 3], 10, 12, doors))
    db = augment_rotations(RoomDatabase(rooms))
    for t in ("bedroom", "kitchen", "bathroom", "storage"):
        for k in range(4):
            scan = sorted(r.id for r in db if r.room_type == t and len(r.portals) == k)
            assert filter_candidates(db, t, k) == scan


def test_extract_graph_path():
    g = extract_graph(paired_pair())
    assert g.nodes == {"A": "bedroom", "B": "kitchen"}
    assert g.edges == [("A", "B")]


def test_extract_graph_ring():
    a = rect_room("a", "living_room", 10, 10, [("right", 3, 4), ("down", 3, 4)])
    b = rect_room("b", "bedroom", 10, 10, [("left", 3, 4), ("down", 3, 4)], x=10)
    c = rect_room("c", "kitchen", 10, 10, [("up", 3, 4), ("left", 3, 4)], x=10, y=10)
    d = rect_room("d", "bathroom", 10, 10, [("up", 3, 4), ("right", 3, 4)], y=10)
    rooms = [PlacedRoom(r, 0, 0, n) for r, n in zip((a, b, c, d), "abcd")]

    def idx(room, facing):
        return [p.facing for p in room.portals].index(facing)

    pairs = [((0, idx(a, "right")), (1, idx(b, "left"))), ((1, idx(b, "down")), (2, idx(c, "up"))),
             ((2, idx(c, "left")), (3, idx(d, "right"))), ((3, idx(d, "up")), (0, idx(a, "down")))]
    fp = FloorPlan(rooms, pairs)
    assert validate(fp) == []
    g = extract_graph(fp)
    assert len(g.nodes) == 4 and len(g.edges) == 4
    assert all(g.degree(n) == 2 for n in g.nodes)
    assert g.is_connected()


def test_extract_graph_rejects_invalid_plan():
    with pytest.raises(ModelError):
        extract_graph(paired_pair(dx=9))


def test_relation_graph_invariants():
    with pytest.raises(ModelError):
        RelationGraph({"a": "bedroom"}, [("a", "a")])
    with pytest.raises(ModelError):
        RelationGraph({"a": "bedroom", "b": "kitchen"}, [("a", "b"), ("b", "a")])
    with pytest.raises(ModelError):
        RelationGraph({"a": "bedroom", "b": "kitchen"}, []).check()
