"""Generation strategies: portal stitching with beam search, and 2D layout matching."""

from __future__ import annotations

import statistics
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geom import OPPOSITE
from .miqp import LayoutOptions, apply_solution, solve_layout
from .model import FloorPlan, ModelError, PlacedRoom, RelationGraph, Room, RoomDatabase, validate
from .retrieval import (
    OUTLINE_SAMPLES,
    CandidateScorer,
    MatchScore,
    NoCandidates,
    RandomScorer,
    ScoreWeights,
    rank,
)

RETRIEVAL_STREAM = 1
PORTAL_STREAM = 2


class NoPlacement(ModelError):
    """No facing-compatible free portal pairs the new room with its placed neighbours."""


class StitchFailure(ModelError):
    def __init__(self, node: str, reason: str, partial: FloorPlan | None = None):
        super().__init__(f"node {node!r}: {reason}")
        self.node = node
        self.reason = reason
        self.partial = partial


class UnsatisfiableNode(StitchFailure):
    pass


def stream(seed: int, kind: int, step: int, lineage: tuple[int, ...] = ()) -> np.random.Generator:
    """Independent generator for one (purpose, step, beam lineage) slot."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), kind, step, *lineage]))


# --- insertion order -----------------------------------------------------------


def insertion_order(g: RelationGraph) -> list[str]:
    """Breadth-first from the highest-degree node; ties and neighbours by node id."""
    if not g.nodes:
        return []
    if not g.is_connected():
        raise ModelError("relation graph is disconnected")
    start = min(g.nodes, key=lambda n: (-g.degree(n), n))
    order, seen = [start], {start}
    todo = deque([start])
    while todo:
        n = todo.popleft()
        for m in g.neighbors(n):
            if m not in seen:
                seen.add(m)
                order.append(m)
                todo.append(m)
    return order


# --- initial placement -----------------------------------------------------------


@dataclass(frozen=True)
class Placement:
    dx: float
    dy: float
    pairings: tuple[tuple[tuple[int, int], int], ...]  # ((placed room, portal), new portal)


def _free_portals(fp: FloorPlan, i: int) -> list[int]:
    used = fp.paired_portals()
    return [k for k in range(len(fp.rooms[i].room.portals)) if (i, k) not in used]


def place_initial(partial: FloorPlan, room: Room, neighbors: list[int] | None = None,
                  rng: np.random.Generator | int | None = None) -> Placement:
    """Translate ``room`` so one portal meets a free portal of a placed neighbour.

    The anchoring pair is drawn uniformly among all facing-compatible
    choices.  Every other placed neighbour is then paired greedily with the
    nearest remaining compatible portal; the layout solve closes those gaps.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    hosts = list(range(len(partial.rooms))) if neighbors is None else sorted(neighbors)
    options = []
    for i in hosts:
        for k in _free_portals(partial, i):
            f = partial.rooms[i].room.portals[k].facing
            for j, q in enumerate(room.portals):
                if q.facing == OPPOSITE[f]:
                    options.append((i, k, j))
    if not options:
        raise NoPlacement(f"room {room.id!r} has no portal facing a free portal of its neighbours")
    i, k, j = options[int(rng.integers(len(options)))]
    target = partial.rooms[i].portal_midpoint(k)
    dx, dy = target - room.portals[j].midpoint(room.outline)
    pairs = [((i, k), j)]
    taken = {j}
    moved = room.translated(float(dx), float(dy))
    for h in hosts:
        if h == i:
            continue
        best = None
        for kk in _free_portals(partial, h):
            f = partial.rooms[h].room.portals[kk].facing
            at = partial.rooms[h].portal_midpoint(kk)
            for jj, q in enumerate(moved.portals):
                if jj in taken or q.facing != OPPOSITE[f]:
                    continue
                d = float(np.linalg.norm(q.midpoint(moved.outline) - at))
                if best is None or (d, kk, jj) < best[0]:
                    best = ((d, kk, jj), kk, jj)
        if best is None:
            raise NoPlacement(f"room {room.id!r} cannot also pair with placed room {h}")
        pairs.append(((h, best[1]), best[2]))
        taken.add(best[2])
    return Placement(float(dx), float(dy), tuple(pairs))


def extend(partial: FloorPlan, room: Room, node: str | None, placement: Placement) -> FloorPlan:
    """Partial plan plus ``room`` at its initial placement, with the new pairings."""
    n = len(partial.rooms)
    rooms = list(partial.rooms) + [PlacedRoom(room, placement.dx, placement.dy, node)]
    pairings = list(partial.pairings) + [(ref, (n, j)) for ref, j in placement.pairings]
    return FloorPlan(rooms, pairings, partial.graph)


# --- beam search -------------------------------------------------------------------


@dataclass(frozen=True)
class StitchOptions:
    beam_width: int = 5
    candidates_per_step: int = 8
    time_limit: float = 60.0      # wall clock per layout solve of one candidate
    node_limit: int = 5_000       # per branch-and-bound solve; keeps runs reproducible
    seed: int = 0
    cost_ceiling: float = 10.0
    layout: LayoutOptions = field(default_factory=LayoutOptions)
    scorer: CandidateScorer = field(default_factory=RandomScorer)

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.candidates_per_step < 1:
            raise ValueError("candidates_per_step must be >= 1")


@dataclass(frozen=True)
class BeamState:
    plan: FloorPlan
    placed: tuple[str, ...] = ()
    cost: float = 0.0
    lineage: tuple[int, ...] = ()
    step_costs: tuple[float, ...] = ()   # deformation part of each layout solve
    last_room: str = ""

    @property
    def deformation(self) -> float:
        return float(sum(self.step_costs))


def beam_score(state: BeamState) -> float:
    """Cumulative layout objective over all insertions; lower is better."""
    return state.cost


def _beam_key(state: BeamState):
    return (beam_score(state), -len(state.placed), state.last_room, state.lineage)


@dataclass
class StitchResult:
    plan: FloorPlan
    cost: float
    deformation: float
    order: list[str]
    beam: list[BeamState]
    trace: list[dict]


def _adjacency_reward(res) -> float:
    lp, x = res.lp, res.solution.x
    return lp.options.lam_adjacent * sum(float(round(x[pv.adj])) for key, pv in lp.pairs.items() if lp.gate[key])


def stitch(g: RelationGraph, db: RoomDatabase, opts: StitchOptions = StitchOptions()) -> StitchResult:
    """Assemble a plan for ``g`` room by room, keeping the best partial plans.

    Every insertion draws candidates, places each against a neighbour's
    portal and snaps the layout; states whose snap fails or leaves the plan
    invalid are dropped.
    """
    g.check()
    order = insertion_order(g)
    trace: list[dict] = []
    beam = [BeamState(FloorPlan([], [], g))]
    for step, node in enumerate(order):
        rtype, degree = g.nodes[node], g.degree(node)
        children: list[BeamState] = []
        for st in beam:
            children += _expand(st, step, node, rtype, degree, db, opts, trace)
        if not children:
            best = min(beam, key=_beam_key)
            raise StitchFailure(node, "no candidate could be placed validly", best.plan)
        children.sort(key=_beam_key)
        beam = children[: opts.beam_width]
    best = beam[0]
    return StitchResult(best.plan, best.cost, best.deformation, order, beam, trace)


def _expand(st: BeamState, step, node, rtype, degree, db, opts: StitchOptions, trace) -> list[BeamState]:
    fp = st.plan
    placed_nbrs = [fp.room_of_node(m) for m in fp.graph.neighbors(node) if fp.room_of_node(m) is not None]
    context = fp.rooms[placed_nbrs[0]].room if placed_nbrs else None
    try:
        ids = opts.scorer.propose(db, rtype, degree, stream(opts.seed, RETRIEVAL_STREAM, step, st.lineage), context)
    except NoCandidates as e:
        raise UnsatisfiableNode(node, str(e), fp) from None
    ids = list(dict.fromkeys(ids))[: opts.candidates_per_step]
    ok, over = [], []
    ceiling = np.inf
    if st.step_costs:
        med = statistics.median(st.step_costs)
        if med > 0:
            ceiling = opts.cost_ceiling * med
    for ci, rid in enumerate(ids):
        lineage = st.lineage + (ci,)
        room = db[rid]
        entry = {"step": step, "node": node, "candidate": rid, "lineage": list(lineage)}
        if not fp.rooms:
            nfp = FloorPlan([PlacedRoom(room, 0.0, 0.0, node)], [], fp.graph)
            trace.append(entry | {"objective": 0.0, "status": "placed"})
            ok.append(BeamState(nfp, (node,), 0.0, lineage, (), rid))
            continue
        try:
            pl = place_initial(fp, room, placed_nbrs, stream(opts.seed, PORTAL_STREAM, step, lineage))
        except NoPlacement:
            trace.append(entry | {"objective": None, "status": "no_placement"})
            continue
        trial = extend(fp, room, node, pl)
        res = solve_layout(trial, opts.layout, opts.time_limit, opts.node_limit, new_room=len(trial.rooms) - 1)
        if not res.feasible:
            trace.append(entry | {"objective": None, "status": res.solution.status})
            continue
        out = apply_solution(res.lp, res.solution)
        if validate(out):
            trace.append(entry | {"objective": res.solution.objective, "status": "invalid"})
            continue
        obj = float(res.solution.objective)
        deform = max(obj + _adjacency_reward(res), 0.0)
        child = BeamState(out, st.placed + (node,), st.cost + obj, lineage, st.step_costs + (deform,), rid)
        status = res.solution.status
        if deform > ceiling:
            over.append(child)
            status += ":over_ceiling"
        else:
            ok.append(child)
        trace.append(entry | {"objective": obj, "status": status})
    return ok or over


# --- 2D-before-3D -------------------------------------------------------------------


@dataclass(frozen=True)
class Assignment:
    index: int
    node: str
    room_id: str
    score: MatchScore


def match_layout(target: FloorPlan, db: RoomDatabase, w: ScoreWeights = ScoreWeights(),
                 n: int = OUTLINE_SAMPLES) -> list[Assignment]:
    """Best-scoring database room for every room of a 2D plan."""
    out = []
    names = target.node_ids()
    for i, placed in enumerate(target.rooms):
        t = placed.room
        try:
            rid, s = rank(db, t, w, n)[0]
        except NoCandidates as e:
            raise NoCandidates(e.room_type, e.portal_count, names[i]) from None
        out.append(Assignment(i, names[i], rid, s))
    return out

