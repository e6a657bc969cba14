"""Independent oracles for outline correspondence, cage mapping and collisions."""

import itertools

import numpy as np
from helpers import rect_outline
from shapely.geometry import Polygon
from shapely.ops import unary_union

from roomforge.geom import RectPolygon


# --- correspondence: every pin assignment, grid Viterbi between pins -------------


class _Grid:
    def __init__(self, corr, step):
        self.corr = corr
        self.step = step
        src, tgt = corr.source, corr.target
        self.N = len(corr.source_params)
        w = corr.weights
        self.we, self.wn = w.lam_e / self.N, w.lam_n / self.N
        ps = src.arc_points(corr.source_params)
        qs = np.roll(ps, -1, axis=0)
        self.vertical = np.abs(ps[:, 0] - qs[:, 0]) < 1e-12
        self.c = list(tgt.corner_params)
        self.cT = len(self.c)
        self.tgt = tgt
        self.walls = {}
        for (ia, ib), (_, _, lo, hi) in zip(corr.portal_samples, corr.portal_intervals):
            i = ia
            while True:
                self.walls[i] = (lo, hi)
                if i == ib:
                    break
                i = (i + 1) % self.N
        self.memo = {}

    def cp(self, t):
        q, r = divmod(t, self.cT)
        return self.c[r] + q

    def point(self, g):
        return self.tgt.arc_points(np.mod(g, 1.0)) / self.tgt.perimeter

    def ok(self, i, g):
        wall = self.walls.get(i % self.N)
        if wall is None:
            return np.ones(len(g), bool)
        v = np.mod(g, 1.0)
        lo, hi = wall
        return ((v >= lo - 1e-12) & (v <= hi + 1e-12)) | ((hi == 1.0) & (v <= 1e-12))

    def pair(self, i, g0, g1):
        d = g1[None, :] - g0[:, None]
        p0, p1 = self.point(g0), self.point(g1)
        ax = 0 if self.vertical[i % self.N] else 1
        dd = p1[None, :, ax] - p0[:, None, ax]
        cost = self.we * (d - 1.0 / self.N) ** 2 + self.wn * dd * dd
        return np.where(d > 0, cost, np.inf)

    def chain(self, ia, ib, t1, t2):
        key = (ia % self.N, ib - ia, t1 % self.cT, t2 - t1)
        if key in self.memo:
            return self.memo[key]
        u0, u1 = self.cp(t1), self.cp(t2)
        grid = np.arange(np.floor(u0 / self.step), np.ceil(u1 / self.step) + 1) * self.step
        extra = [self.cp(t) for t in range(t1 + 1, t2)]
        grid = np.unique(np.concatenate([grid, extra]))
        grid = grid[(grid > u0 + 1e-12) & (grid < u1 - 1e-12)]
        prev = np.array([u0])
        V = np.zeros(1)
        for i in range(ia, ib - 1):
            nxt = grid[self.ok(i + 1, grid)]
            if len(nxt) == 0:
                self.memo[key] = np.inf
                return np.inf
            V = (V[:, None] + self.pair(i, prev, nxt)).min(axis=0)
            prev = nxt
        best = float((V[:, None] + self.pair(ib - 1, prev, np.array([u1]))).min())
        self.memo[key] = best
        return best


def brute_correspondence(corr, step=1e-3):
    """Minimum objective over all pin assignments with free samples on a grid.

    Every non-empty set of source corners is tried against every cyclically
    increasing choice of target corners; the free samples between two pins
    take values on a ``step`` grid (plus target corners) by exact dynamic
    programming.  The no-pin case is omitted: it can only win when the
    weight bound lets costs outweigh one pinned corner.
    """
    g = _Grid(corr, step)
    corners = [i for i in range(g.N) if corr.source_corners[i]]
    best = np.inf
    for p in range(len(corners), 0, -1):
        if -float(p) >= best:       # chain costs are non-negative
            break
        for pins in itertools.combinations(corners, p):
            for t0 in range(g.cT):
                for rest in itertools.combinations(range(t0 + 1, t0 + g.cT), p - 1):
                    ts = (t0,) + rest
                    if not all(g.ok(i, np.array([g.cp(t)]))[0] for i, t in zip(pins, ts)):
                        continue
                    total = -float(p)
                    seq = list(zip(pins, ts)) + [(pins[0] + g.N, t0 + g.cT)]
                    for (ia, t1), (ib, t2) in zip(seq, seq[1:]):
                        total += g.chain(ia, ib, t1, t2)
                        if total >= best:
                            break
                    best = min(best, total)
    return best


# --- mean value coordinates from angles ----------------------------------------


def mvc_oracle(p, cage):
    """Mean value weights via tan(alpha/2) computed from atan2 angles."""
    p = np.asarray(p, float)
    cage = np.asarray(cage, float)
    n = len(cage)
    w = np.zeros(n)
    for i in range(n):
        vi = cage[i] - p
        ri = np.hypot(*vi)
        prev, nxt = cage[i - 1] - p, cage[(i + 1) % n] - p
        a0 = np.arctan2(prev[0] * vi[1] - prev[1] * vi[0], prev @ vi)
        a1 = np.arctan2(vi[0] * nxt[1] - vi[1] * nxt[0], vi @ nxt)
        w[i] = (np.tan(a0 / 2) + np.tan(a1 / 2)) / ri
    return w / w.sum()


# --- collisions ---------------------------------------------------------------


def footprint(mesh):
    tris = []
    for f in mesh.faces:
        pts = mesh.vertices[f, :2]
        poly = Polygon(pts)
        if poly.area > 1e-12:
            tris.append(poly)
    return unary_union(tris)


def collisions(objects, outline_m, tol=1e-9):
    """Pairs of colliding objects plus objects leaving the outline."""
    feet = [footprint(m) for m in objects]
    z = [(m.vertices[:, 2].min(), m.vertices[:, 2].max()) for m in objects]
    room = Polygon(outline_m)
    out = []
    for i, j in itertools.combinations(range(len(objects)), 2):
        if min(z[i][1], z[j][1]) - max(z[i][0], z[j][0]) > tol and feet[i].intersection(feet[j]).area > tol:
            out.append((i, j))
    for i, f in enumerate(feet):
        if f.difference(room).area > tol:
            out.append((i, None))
    return out


def pairwise_scale(a, b):
    """Common factor between the intra-object distances of two vertex arrays, and its spread."""
    da = np.linalg.norm(a[:, None] - a[None], axis=2)
    db = np.linalg.norm(b[:, None] - b[None], axis=2)
    mask = da > 1e-9
    ratios = db[mask] / da[mask]
    return float(ratios.mean()), float(np.abs(db - ratios.mean() * da).max())


SQ = rect_outline(0, 0, 1, 1)
RECT = rect_outline(0, 0, 2, 1)
TALL = rect_outline(0, 0, 1, 2)
LONG = rect_outline(0, 0, 3, 1)
L_SHAPE = RectPolygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
L_MIRROR = RectPolygon([(0, 0), (2, 0), (2, 2), (1, 2), (1, 1), (0, 1)])
U_SHAPE = RectPolygon([(0, 0), (3, 0), (3, 2), (2, 2), (2, 1), (1, 1), (1, 2), (0, 2)])

# (name, source, target, portal segments (src a, src b, tgt a, tgt b), N)
ORACLE_FIXTURES = [
    ("square-rect", SQ, RECT, [], 16),
    ("square-L", SQ, L_SHAPE, [], 12),
    ("L-square", L_SHAPE, SQ, [], 12),
    ("long-L", LONG, L_SHAPE, [], 16),
    ("L-mirror", L_SHAPE, L_MIRROR, [], 12),
    ("U-rect", U_SHAPE, RECT, [], 16),
    ("rect-U", RECT, U_SHAPE, [], 16),
    ("rect-tall", RECT, TALL, [], 12),
    ("L-U", L_SHAPE, U_SHAPE, [], 14),
    ("square-rect-portal", SQ, RECT, [((0.3, 0), (0.6, 0), (2, 0.3), (2, 0.6))], 16),
    ("L-square-portal", L_SHAPE, SQ, [((2, 0.2), (2, 0.7), (0.3, 1), (0.6, 1))], 16),
    ("square-rect-two-portals", SQ, RECT,
     [((0.2, 0), (0.5, 0), (0.5, 0), (1.0, 0)), ((0, 0.4), (0, 0.7), (0, 0.2), (0, 0.6))], 16),
]
