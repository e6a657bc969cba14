"""Layout snapping program: rooms as rectangle groups, portals as sliding segments."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..geom import GridDecomposition, Rect, RectPolygon, maximal_grid
from ..model import FloorPlan, ModelError
from .bnb import MiqpSolution, solve
from .program import Program

DIRECTIONS = ("T", "B", "L", "R")


class LayoutError(ModelError):
    pass


@dataclass(frozen=True)
class LayoutOptions:
    min_room_size: float = 20.0          # s
    adjacency_length: float = 6.0        # L
    lam_shape: float = 1.0               # rectangle width/height change
    lam_radius: float = 5.0              # portal half-length change
    lam_adjacent: float = 100.0          # adjacency reward
    lam_slide: float = 3.0               # portal position along its wall
    lam_position: float = 1e-3           # tie-breaker on rectangle translation
    min_extent: float = 1.0              # no rectangle thinner than this (or half its start size)
    min_portal_ratio: float = 0.5        # pr >= ratio * initial pr
    pad: float | None = None             # free margin around the layout; None = automatic
    prune: bool = True

    def __post_init__(self):
        for k in ("min_room_size", "adjacency_length", "lam_shape", "lam_radius", "lam_adjacent",
                  "lam_slide", "lam_position", "min_extent", "min_portal_ratio"):
            if getattr(self, k) < 0:
                raise ValueError(f"{k} must be non-negative")


@dataclass
class PortalVar:
    room: int
    portal: int
    facing: str
    first: int      # rect index at the start of the wall (top-most / left-most)
    last: int       # rect index at the end of the wall
    px: int
    py: int
    pr: int
    init: tuple[float, float, float]

    @property
    def vertical(self) -> bool:
        return self.facing in ("left", "right")


@dataclass
class PairVars:
    i: int
    j: int
    sigma: dict[str, int]
    adj: int
    theta: int


@dataclass
class LayoutProgram:
    program: Program
    fp: FloorPlan
    options: LayoutOptions
    offset: np.ndarray
    X: float
    Y: float
    M: float
    rects: list[Rect]                       # initial rects, program frame
    rect_room: list[int]
    rect_vars: list[tuple[int, int, int, int]]
    room_rects: list[list[int]]
    grids: list[GridDecomposition]
    spans: list[tuple[list[int], list[int]]]
    portals: list[PortalVar]
    portal_of: dict[tuple[int, int], int]
    pairs: dict[tuple[int, int], PairVars]
    pruned: list[tuple[int, int]]
    gate: dict[tuple[int, int], bool]
    labels: list[str] = field(default_factory=list)

    def rect_value(self, x, i) -> Rect:
        a, b, c, d = self.rect_vars[i]
        return Rect(float(x[a]), float(x[b]), max(float(x[c]), 0.0), max(float(x[d]), 0.0))


def _spanning(grid: GridDecomposition, bbox_mid: tuple[float, float]) -> tuple[list[int], list[int]]:
    """One cell per grid column (R^x) and per grid row (R^y), nearest the bbox midlines."""
    cols: dict[int, list[int]] = {}
    rows: dict[int, list[int]] = {}
    for k, (c, r) in enumerate(grid.cells):
        cols.setdefault(c, []).append(k)
        rows.setdefault(r, []).append(k)
    mx, my = bbox_mid

    def yc(k):
        rc = grid.rects[k]
        return abs(rc.y + rc.h / 2 - my)

    def xc(k):
        rc = grid.rects[k]
        return abs(rc.x + rc.w / 2 - mx)

    rx = [min(cols[c], key=lambda k: (yc(k), grid.cells[k][1])) for c in sorted(cols)]
    ry = [min(rows[r], key=lambda k: (xc(k), grid.cells[k][0])) for r in sorted(rows)]
    return rx, ry


def _wall_cells(grid: GridDecomposition, a, b, facing: str, tol=1e-7) -> list[int]:
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    out = []
    for k, r in enumerate(grid.rects):
        if facing == "up":
            hit = abs(r.y - a[1]) <= tol and r.x >= lo[0] - tol and r.x2 <= hi[0] + tol
        elif facing == "down":
            hit = abs(r.y2 - a[1]) <= tol and r.x >= lo[0] - tol and r.x2 <= hi[0] + tol
        elif facing == "left":
            hit = abs(r.x - a[0]) <= tol and r.y >= lo[1] - tol and r.y2 <= hi[1] + tol
        else:
            hit = abs(r.x2 - a[0]) <= tol and r.y >= lo[1] - tol and r.y2 <= hi[1] + tol
        if hit:
            out.append(k)
    key = (lambda k: grid.rects[k].y) if facing in ("left", "right") else (lambda k: grid.rects[k].x)
    return sorted(out, key=key)


def room_complete(fp: FloorPlan, room: int) -> bool:
    """True when every graph neighbour of the room's node is already placed."""
    g = fp.graph
    node = fp.rooms[room].node
    if g is None or node is None or node not in g.nodes:
        return True
    placed = {r.node for r in fp.rooms}
    return all(m in placed for m in g.neighbors(node))


def _rect_gap(a: Rect, b: Rect) -> float:
    dx = max(0.0, max(a.x, b.x) - min(a.x2, b.x2))
    dy = max(0.0, max(a.y, b.y) - min(a.y2, b.y2))
    return math.hypot(dx, dy)


def build_program(fp: FloorPlan, options: LayoutOptions = LayoutOptions(),
                  include_pairs: set[tuple[int, int]] | frozenset = frozenset()) -> LayoutProgram:
    """Encode the plan as a mixed-integer QP around its current geometry."""
    o = options
    if not fp.rooms:
        raise LayoutError("empty floor plan")
    outlines = [pr.outline for pr in fp.rooms]
    lo = np.min([ol.vertices.min(axis=0) for ol in outlines], axis=0)
    hi = np.max([ol.vertices.max(axis=0) for ol in outlines], axis=0)
    extent = hi - lo
    pad = o.pad if o.pad is not None else max(o.min_room_size, o.adjacency_length, 0.5 * float(extent.max()))
    offset = pad - lo
    X = float(extent[0] + 2 * pad)
    Y = float(extent[1] + 2 * pad)
    if min(X, Y) < o.adjacency_length:
        X, Y = max(X, o.adjacency_length), max(Y, o.adjacency_length)
    M = X + Y
    prog = Program()

    rects: list[Rect] = []
    rect_room: list[int] = []
    rect_vars = []
    room_rects: list[list[int]] = []
    grids, spans, labels = [], [], []
    for r, ol in enumerate(outlines):
        poly = ol.translated(*offset)
        grid = maximal_grid(poly)
        if not grid.rects:
            raise LayoutError(f"room {r} has no valid decomposition")
        grids.append(grid)
        ids = []
        for k, rc in enumerate(grid.rects):
            i = len(rects)
            lab = f"r{r}c{k}"
            ext_w = min(o.min_extent, 0.5 * rc.w)
            ext_h = min(o.min_extent, 0.5 * rc.h)
            vx = prog.add_var(f"x[{lab}]", 0.0, np.inf, init=rc.x)
            vy = prog.add_var(f"y[{lab}]", 0.0, np.inf, init=rc.y)
            vw = prog.add_var(f"w[{lab}]", ext_w, np.inf, init=rc.w)
            vh = prog.add_var(f"h[{lab}]", ext_h, np.inf, init=rc.h)
            rects.append(rc)
            rect_room.append(r)
            rect_vars.append((vx, vy, vw, vh))
            labels.append(lab)
            ids.append(i)
        room_rects.append(ids)
        x0, y0, x1, y1 = poly.bbox
        rx, ry = _spanning(grid, ((x0 + x1) / 2, (y0 + y1) / 2))
        spans.append(([ids[k] for k in rx], [ids[k] for k in ry]))

    portals: list[PortalVar] = []
    portal_of: dict[tuple[int, int], int] = {}
    for r, pr in enumerate(fp.rooms):
        poly = outlines[r].translated(*offset)
        for k, p in enumerate(pr.room.portals):
            a, b = (e + np.array([pr.dx, pr.dy]) + offset for e in p.endpoints(pr.room.outline))
            wa, wb = poly.edge(p.wall)
            cells = _wall_cells(grids[r], wa, wb, p.facing)
            if not cells:
                raise LayoutError(f"portal {k} of room {r} is not resident on any wall")
            mid = (a + b) / 2
            rad = float(np.linalg.norm(b - a)) / 2
            lab = f"r{r}p{k}"
            vpx = prog.add_var(f"px[{lab}]", 0.0, np.inf, init=mid[0])
            vpy = prog.add_var(f"py[{lab}]", 0.0, np.inf, init=mid[1])
            vpr = prog.add_var(f"pr[{lab}]", o.min_portal_ratio * rad, np.inf, init=rad)
            portal_of[(r, k)] = len(portals)
            portals.append(PortalVar(r, k, p.facing, room_rects[r][cells[0]], room_rects[r][cells[-1]],
                                     vpx, vpy, vpr, (float(mid[0]), float(mid[1]), rad)))

    gate = {}
    complete = [room_complete(fp, r) for r in range(len(fp.rooms))]
    pairs: dict[tuple[int, int], PairVars] = {}
    pruned = []
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            ra, rb = rect_room[i], rect_room[j]
            if ra == rb:
                continue
            gate[(i, j)] = complete[ra] and complete[rb]
            far = _rect_gap(rects[i], rects[j]) > math.hypot(rects[i].w, rects[i].h) + math.hypot(rects[j].w, rects[j].h)
            if o.prune and far and (i, j) not in include_pairs:
                pruned.append((i, j))
                continue
            li, lj = labels[i], labels[j]
            sig = {D: prog.add_var(f"s{D}[{li},{lj}]", binary=True) for D in DIRECTIONS}
            adj = prog.add_var(f"sA[{li},{lj}]", binary=True)
            th = prog.add_var(f"th[{li},{lj}]", binary=True)
            pairs[(i, j)] = PairVars(i, j, sig, adj, th)

    lp = LayoutProgram(prog, fp, o, offset, X, Y, M, rects, rect_room, rect_vars, room_rects, grids,
                       spans, portals, portal_of, pairs, pruned, gate, labels)
    _constraints(lp)
    _objective(lp)
    return lp


def _constraints(lp: LayoutProgram) -> None:
    prog, o, M, L = lp.program, lp.options, lp.M, lp.options.adjacency_length
    for i, (vx, vy, vw, vh) in enumerate(lp.rect_vars):
        prog.add_row({vx: 1, vw: 1}, "le", lp.X, "bbox", (lp.labels[i], "x"))
        prog.add_row({vy: 1, vh: 1}, "le", lp.Y, "bbox", (lp.labels[i], "y"))
    for r, (rx, ry) in enumerate(lp.spans):
        prog.add_row({lp.rect_vars[i][2]: 1 for i in rx}, "ge", o.min_room_size, "min_size", (r, "x"))
        prog.add_row({lp.rect_vars[i][3]: 1 for i in ry}, "ge", o.min_room_size, "min_size", (r, "y"))
    for r, grid in enumerate(lp.grids):
        ids = lp.room_rects[r]
        for a, b in grid.right:
            i, j = ids[a], ids[b]
            xi, yi, wi, hi = lp.rect_vars[i]
            xj, yj, wj, hj = lp.rect_vars[j]
            sub = (lp.labels[i], lp.labels[j])
            prog.add_row({xi: 1, wi: 1, xj: -1}, "eq", 0.0, "decomposition", sub)
            prog.add_row({yi: 1, yj: -1}, "eq", 0.0, "decomposition", sub)
            prog.add_row({hi: 1, hj: -1}, "eq", 0.0, "decomposition", sub)
        for a, b in grid.below:
            i, j = ids[a], ids[b]
            xi, yi, wi, hi = lp.rect_vars[i]
            xj, yj, wj, hj = lp.rect_vars[j]
            sub = (lp.labels[i], lp.labels[j])
            prog.add_row({yi: 1, hi: 1, yj: -1}, "eq", 0.0, "decomposition", sub)
            prog.add_row({xi: 1, xj: -1}, "eq", 0.0, "decomposition", sub)
            prog.add_row({wi: 1, wj: -1}, "eq", 0.0, "decomposition", sub)

    for (i, j), pv in lp.pairs.items():
        xi, yi, wi, hi = lp.rect_vars[i]
        xj, yj, wj, hj = lp.rect_vars[j]
        s = pv.sigma
        sub = (lp.labels[i], lp.labels[j])
        # i right of j / left of j / below j / above j
        prog.add_row({xi: -1, xj: 1, wj: 1, s["R"]: M}, "le", M, "no_overlap", sub + ("R",), (s["R"], 0.0))
        prog.add_row({xi: 1, wi: 1, xj: -1, s["L"]: M}, "le", M, "no_overlap", sub + ("L",), (s["L"], 0.0))
        prog.add_row({yi: -1, yj: 1, hj: 1, s["B"]: M}, "le", M, "no_overlap", sub + ("B",), (s["B"], 0.0))
        prog.add_row({yi: 1, hi: 1, yj: -1, s["T"]: M}, "le", M, "no_overlap", sub + ("T",), (s["T"], 0.0))
        prog.add_row({s[D]: 1 for D in DIRECTIONS}, "ge", 1.0, "no_overlap_any", sub)
        a, t = pv.adj, pv.theta
        relax = (a, 0.0)
        prog.add_row({xi: 1, xj: -1, wj: -1, t: L, a: M}, "le", M, "adjacency", sub + (0,), relax)
        prog.add_row({xi: -1, wi: -1, xj: 1, t: L, a: M}, "le", M, "adjacency", sub + (1,), relax)
        prog.add_row({yi: 1, yj: -1, hj: -1, t: -L, a: M}, "le", M - L, "adjacency", sub + (2,), relax)
        prog.add_row({yi: -1, hi: -1, yj: 1, t: -L, a: M}, "le", M - L, "adjacency", sub + (3,), relax)

    for p, q in lp.fp.pairings:
        a, b = lp.portals[lp.portal_of[p]], lp.portals[lp.portal_of[q]]
        for u, v in ((a.px, b.px), (a.py, b.py), (a.pr, b.pr)):
            prog.add_row({u: 1, v: -1}, "eq", 0.0, "portal_link", (tuple(p), tuple(q)))

    by_wall: dict[tuple, list[PortalVar]] = {}
    for pv in lp.portals:
        fx, fy, fw, fh = lp.rect_vars[pv.first]
        lx, ly, lw, lh = lp.rect_vars[pv.last]
        sub = (pv.room, pv.portal)
        if pv.facing == "up":
            prog.add_row({pv.py: 1, fy: -1}, "eq", 0.0, "portal_slide", sub)
        elif pv.facing == "down":
            prog.add_row({pv.py: 1, fy: -1, fh: -1}, "eq", 0.0, "portal_slide", sub)
        elif pv.facing == "left":
            prog.add_row({pv.px: 1, fx: -1}, "eq", 0.0, "portal_slide", sub)
        else:
            prog.add_row({pv.px: 1, fx: -1, fw: -1}, "eq", 0.0, "portal_slide", sub)
        if pv.vertical:
            prog.add_row({pv.py: -1, fy: 1, pv.pr: 1}, "le", 0.0, "portal_slide", sub)
            prog.add_row({pv.py: 1, ly: -1, lh: -1, pv.pr: 1}, "le", 0.0, "portal_slide", sub)
        else:
            prog.add_row({pv.px: -1, fx: 1, pv.pr: 1}, "le", 0.0, "portal_slide", sub)
            prog.add_row({pv.px: 1, lx: -1, lw: -1, pv.pr: 1}, "le", 0.0, "portal_slide", sub)
        by_wall.setdefault((pv.room, pv.facing, pv.first, pv.last), []).append(pv)
    # portals sharing a wall keep their order and do not overlap
    for group in by_wall.values():
        axis = 1 if group[0].vertical else 0
        group.sort(key=lambda pv: pv.init[axis])
        for a, b in zip(group, group[1:]):
            ca, cb = (a.py, b.py) if axis else (a.px, b.px)
            prog.add_row({ca: 1, a.pr: 1, cb: -1, b.pr: 1}, "le", 0.0, "portal_order", (a.room, a.portal, b.portal))


def _objective(lp: LayoutProgram) -> None:
    prog, o = lp.program, lp.options
    prog.start_objective()
    for i, (vx, vy, vw, vh) in enumerate(lp.rect_vars):
        rc = lp.rects[i]
        prog.add_square({vw: 1}, rc.w, o.lam_shape)
        prog.add_square({vh: 1}, rc.h, o.lam_shape)
        prog.add_square({vx: 1}, rc.x, o.lam_position)
        prog.add_square({vy: 1}, rc.y, o.lam_position)
    for pv in lp.portals:
        px0, py0, pr0 = pv.init
        prog.add_square({pv.pr: 1}, pr0, o.lam_radius)
        f, l = lp.rects[pv.first], lp.rects[pv.last]
        if pv.vertical:
            prog.add_square({pv.py: 1, lp.rect_vars[pv.first][1]: -1}, py0 - f.y, o.lam_slide)
            prog.add_square({pv.py: 1, lp.rect_vars[pv.last][1]: -1}, py0 - l.y, o.lam_slide)
        else:
            prog.add_square({pv.px: 1, lp.rect_vars[pv.first][0]: -1}, px0 - f.x, o.lam_slide)
            prog.add_square({pv.px: 1, lp.rect_vars[pv.last][0]: -1}, px0 - l.x, o.lam_slide)
    for (i, j), pv in lp.pairs.items():
        if lp.gate[(i, j)]:
            prog.add_linear(pv.adj, -o.lam_adjacent)


# --- warm start --------------------------------------------------------------


def _slacks(a: Rect, b: Rect) -> dict[str, float]:
    """Slack of 'a is D of b' for each direction D (negative = violated)."""
    return {"T": b.y - a.y2, "B": a.y - b.y2, "L": b.x - a.x2, "R": a.x - b.x2}


def adjacent_now(a: Rect, b: Rect, length: float, tol=1e-7) -> int | None:
    """1 if the rects touch along a horizontal edge sharing >= length, 0 for a vertical edge."""
    ox = min(a.x2, b.x2) - max(a.x, b.x)
    oy = min(a.y2, b.y2) - max(a.y, b.y)
    if abs(oy) <= tol and ox >= length - tol:
        return 1
    if abs(ox) <= tol and oy >= length - tol:
        return 0
    return None


def warm_start(lp: LayoutProgram, margin: float = 0.0, adjacency_gap: float | None = None) -> dict[int, float]:
    """Fix binaries that the current geometry already decides.

    A pair separated in some direction by at least ``margin`` gets that
    direction fixed on and the rest off; overlapping pairs keep their four
    direction binaries free.  Adjacency binaries follow current contacts;
    with ``adjacency_gap`` set, pairs within that distance keep them free.
    """
    fixed: dict[int, float] = {}
    L = lp.options.adjacency_length
    for (i, j), pv in lp.pairs.items():
        a, b = lp.rects[i], lp.rects[j]
        sl = _slacks(a, b)
        ok = [(v, -DIRECTIONS.index(D), D) for D, v in sl.items() if v >= margin - 1e-9]
        if ok:
            chosen = max(ok)[2]
            for D in DIRECTIONS:
                fixed[pv.sigma[D]] = 1.0 if D == chosen else 0.0
        touching = adjacent_now(a, b, L) if ok else None
        if touching is not None and lp.gate[(i, j)]:
            fixed[pv.adj] = 1.0
            fixed[pv.theta] = float(touching)
        elif adjacency_gap is not None and ok and lp.gate[(i, j)] and _rect_gap(a, b) <= adjacency_gap:
            pass
        else:
            fixed[pv.adj] = 0.0
            fixed[pv.theta] = 0.0
    return fixed


# --- solve driver ------------------------------------------------------------


@dataclass
class LayoutResult:
    lp: LayoutProgram
    solution: MiqpSolution
    fixed: dict[int, float]
    attempts: list[str]

    @property
    def feasible(self) -> bool:
        return self.solution.feasible


def pruned_overlaps(lp: LayoutProgram, x, tol=1e-9) -> list[tuple[int, int]]:
    out = []
    for i, j in lp.pruned:
        a, b = lp.rect_value(x, i), lp.rect_value(x, j)
        if max(_slacks(a, b).values()) < -tol:
            out.append((i, j))
    return out


def solve_layout(fp: FloorPlan, options: LayoutOptions = LayoutOptions(), time_limit: float = 60.0,
                 node_limit: int = 20_000, warm: bool = True, new_room: int | None = None,
                 adjacency_gap: float | None = None, max_lazy: int = 3) -> LayoutResult:
    """Build, warm start and solve, with fallbacks and the lazy pair loop.

    ``time_limit`` bounds the whole call; ``node_limit`` applies per solve.
    """
    deadline = time.perf_counter() + time_limit
    include: set[tuple[int, int]] = set()
    attempts: list[str] = []
    for _ in range(max_lazy + 1):
        lp = build_program(fp, options, frozenset(include))
        plans = [("cold", {})]
        if warm:
            base = warm_start(lp, adjacency_gap=adjacency_gap)
            no_adj = {k: v for k, v in base.items()}
            for pv in lp.pairs.values():
                no_adj[pv.adj] = 0.0
                no_adj[pv.theta] = 0.0
            loose = dict(no_adj)
            for (i, j), pv in lp.pairs.items():
                if new_room is None or new_room in (lp.rect_room[i], lp.rect_room[j]):
                    for D in DIRECTIONS:
                        loose.pop(pv.sigma[D], None)
            plans = [("warm", base), ("no_adjacency", no_adj), ("free_new_room", loose)]
        sol, fixed = None, {}
        for name, fx in plans:
            attempts.append(name)
            left = max(deadline - time.perf_counter(), 0.0)
            sol = solve(lp.program, time_limit=left, node_limit=node_limit, fixed=fx)
            fixed = fx
            if sol.feasible:
                break
        if not sol.feasible:
            return LayoutResult(lp, sol, fixed, attempts)
        extra = pruned_overlaps(lp, sol.x)
        if not extra:
            return LayoutResult(lp, sol, fixed, attempts)
        attempts.append(f"lazy+{len(extra)}")
        include.update(extra)
    return LayoutResult(lp, sol, fixed, attempts)


# --- applying a solution -----------------------------------------------------


def _recompose(lp: LayoutProgram, x, r: int) -> RectPolygon:
    grid = lp.grids[r]
    ids = lp.room_rects[r]
    where = {cell: k for k, cell in enumerate(grid.cells)}
    xs, ys = grid.xs, grid.ys
    poly = lp.fp.rooms[r].outline.translated(*lp.offset)
    col = {v: a for a, v in enumerate(xs)}
    row = {v: b for b, v in enumerate(ys)}
    verts = []
    for vx, vy in poly.vertices:
        a, b = col[float(vx)], row[float(vy)]
        acc = []
        for c in (a - 1, a):
            for rr in (b - 1, b):
                k = where.get((c, rr))
                if k is None:
                    continue
                rc = lp.rect_value(x, ids[k])
                acc.append((rc.x if c == a else rc.x2, rc.y if rr == b else rc.y2))
        verts.append(np.mean(acc, axis=0))
    return RectPolygon(np.array(verts) - lp.offset, tol=1e-7)


def apply_solution(lp: LayoutProgram, sol: MiqpSolution) -> FloorPlan:
    """New plan with every room rebuilt from its solved rectangles and portals."""
    if not sol.feasible or sol.x is None:
        raise LayoutError(f"cannot apply a {sol.status} solution")
    x = sol.x
    fp = lp.fp
    # paired portals share one segment exactly
    seg = {}
    for pv in lp.portals:
        seg[(pv.room, pv.portal)] = np.array([x[pv.px], x[pv.py], x[pv.pr]])
    for p, q in fp.pairings:
        m = (seg[tuple(p)] + seg[tuple(q)]) / 2
        seg[tuple(p)] = seg[tuple(q)] = m
    new_rooms = []
    renumber: dict[tuple[int, int], int] = {}
    for r, placed in enumerate(fp.rooms):
        outline_abs = _recompose(lp, x, r)
        t = np.array([placed.dx, placed.dy])
        segments = []
        for k, p in enumerate(placed.room.portals):
            cx, cy, rad = seg[(r, k)]
            c = np.array([cx, cy]) - lp.offset - t
            d = np.array([0.0, rad]) if p.facing in ("left", "right") else np.array([rad, 0.0])
            segments.append((c - d, c + d))
        room = placed.room.with_outline(outline_abs.translated(-t[0], -t[1]), segments)
        mids = np.array([p.midpoint(room.outline) for p in room.portals]).reshape(-1, 2)
        for k, (a, b) in enumerate(segments):
            renumber[(r, k)] = int(np.argmin(np.linalg.norm(mids - (a + b) / 2, axis=1)))
        new_rooms.append(replace(placed, room=room))
    pairings = [((p[0], renumber[tuple(p)]), (q[0], renumber[tuple(q)])) for p, q in fp.pairings]
    return FloorPlan(new_rooms, pairings, fp.graph)
