"""Outline correspondence between a source and a target room outline.

Both outlines are parametrized by unit arc length from their first corner.
The source is sampled at ``N`` fixed parameters (all corners and all portal
endpoints included); the solver picks monotone target parameters that
spread evenly, keep axis-aligned segments axis-aligned and land source
corners on target corners.

Phase 1 is a dynamic program over which source corners are pinned to which
target corners.  Between two pins the free samples form a chain whose cost
is convex once each sample's target edge is fixed, so phase 2 solves one
small QP per admissible edge assignment.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import clarabel
import numpy as np
import scipy.sparse as sp
from scipy.linalg import solveh_banded

from ..geom import GeometryError, RectPolygon
from ..model import Portal

GAP = 1e-9            # minimum spacing between consecutive target params
CORNER_TOL = 1e-12
MAX_COMPOSITIONS = 200
WINDOW = 2


class CorrespondenceError(GeometryError):
    pass


@dataclass(frozen=True)
class CorrespondenceWeights:
    lam_e: float = 1.0
    lam_n: float = 1.0
    n: int = 250

    def __post_init__(self):
        if self.lam_e < 0 or self.lam_n < 0:
            raise ValueError("correspondence weights must be non-negative")
        if self.n < 4:
            raise ValueError("sample count must be at least 4")

    @property
    def cost_bound(self) -> float:
        """Upper bound of elasticity plus normal cost over all monotone maps."""
        n = self.n
        return (self.lam_e * (1 - 1 / n) + self.lam_n) / n


@dataclass(frozen=True)
class PortalPair:
    source: Portal
    target: Portal


@dataclass(frozen=True)
class OutlineCorrespondence:
    source: RectPolygon
    target: RectPolygon
    source_params: np.ndarray       # u_S, in [0, 1)
    source_corners: np.ndarray      # sigma_S
    target_params: np.ndarray       # u_T, strictly increasing, first in [0, 1)
    vertical: np.ndarray            # theta: source segment i -> i+1 is vertical
    portal_samples: tuple = ()      # (index of a, index of b) per portal pair
    portal_intervals: tuple = ()    # (mu_S^a, mu_S^b, mu_T^a, mu_T^b)
    weights: CorrespondenceWeights = field(default_factory=CorrespondenceWeights)
    objective: float = 0.0

    @cached_property
    def target_corners(self) -> np.ndarray:
        return on_corner(self.target, self.target_params)

    def source_points(self) -> np.ndarray:
        return self.source.arc_points(self.source_params)

    def target_points(self) -> np.ndarray:
        return self.target.arc_points(self.target_params)

    @property
    def corner_reward(self) -> int:
        return int(np.sum(self.source_corners & self.target_corners))

    def map_param(self, u: float) -> float:
        """Piecewise-linear image of a source parameter (lifted)."""
        us = np.append(self.source_params, 1.0)
        ut = np.append(self.target_params, self.target_params[0] + 1.0)
        return float(np.interp(u % 1.0, us, ut))


def on_corner(poly: RectPolygon, params) -> np.ndarray:
    c = np.append(poly.corner_params, 1.0)
    u = np.mod(np.asarray(params, float), 1.0)
    return np.abs(u[:, None] - c[None, :]).min(axis=1) <= CORNER_TOL


def source_samples(src: RectPolygon, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Corners plus evenly spread fill, ``n`` params in total.

    Fill samples go to the edges in proportion to edge length (largest
    remainder, ties to the earlier edge) and sit evenly within each edge.
    """
    fixed = [float(u) for u in src.corner_params]
    extra = n - len(fixed)
    if extra < 0:
        raise CorrespondenceError(f"sample count {n} below the {len(fixed)} corners")
    ends = fixed[1:] + [1.0]
    lens = np.array([b - a for a, b in zip(fixed, ends)])
    quota = extra * lens / lens.sum()
    counts = np.floor(quota).astype(int)
    left = extra - int(counts.sum())
    if left:
        frac = quota - counts
        for k in sorted(range(len(fixed)), key=lambda k: (-frac[k], k))[:left]:
            counts[k] += 1
    params, flags = [], []
    for a, b, m in zip(fixed, ends, counts):
        params.append(a)
        flags.append(True)
        for j in range(1, m + 1):
            params.append(a + (b - a) * j / (m + 1))
            flags.append(False)
    return np.array(params), np.array(flags, dtype=bool)


def segment_vertical(src: RectPolygon, params) -> np.ndarray:
    u = np.append(params, 1.0)
    return np.array([src.is_vertical(src.edge_at((a + b) / 2)) for a, b in zip(u[:-1], u[1:])], dtype=bool)


def objective(src: RectPolygon, tgt: RectPolygon, u_s, sigma_s, u_t, w: CorrespondenceWeights) -> float:
    """Elasticity plus normal cost minus corner reward of a correspondence."""
    u_t = np.asarray(u_t, float)
    n = len(u_t)
    theta = segment_vertical(src, u_s)
    nxt = np.append(u_t[1:], u_t[0] + 1.0)
    du = nxt - u_t
    p = tgt.arc_points(u_t) / tgt.perimeter
    q = tgt.arc_points(nxt) / tgt.perimeter
    dx, dy = (q - p).T
    elastic = (du - 1.0 / n) ** 2
    normal = np.where(theta, dx * dx, dy * dy)
    reward = np.sum(np.asarray(sigma_s, bool) & on_corner(tgt, u_t))
    return float(w.lam_e / n * elastic.sum() + w.lam_n / n * normal.sum() - reward)


# --- solver ----------------------------------------------------------------------


class _Problem:
    """Lifted bookkeeping: sample i + N is sample i one lap later, likewise corners."""

    def __init__(self, src, tgt, u_s, sigma_s, allowed_walls, w):
        self.src, self.tgt, self.w = src, tgt, w
        self.u_s, self.sigma_s = u_s, sigma_s
        self.N = len(u_s)
        self.theta = segment_vertical(src, u_s)
        self.cT = len(tgt)
        self.c = tgt.corner_params
        verts = tgt.vertices / tgt.perimeter
        self.start = verts
        nxt = np.roll(verts, -1, axis=0)
        self.dir = (nxt - verts) / (tgt.edge_lengths / tgt.perimeter)[:, None]
        self.allowed = allowed_walls     # sample -> target wall index (portal ends)
        self._keys = sorted(allowed_walls)
        self.corners = [i for i in range(self.N) if sigma_s[i]]
        self._chains: dict = {}

    def cparam(self, t: int) -> float:
        q, r = divmod(t, self.cT)
        return float(self.c[r] + q)

    def edge_form(self, e: int):
        """Normalized point on lifted edge e as a * u + b."""
        q, r = divmod(e, self.cT)
        a = self.dir[r]
        b = self.start[r] - a * (self.c[r] + q)
        return a, b

    def pin_ok(self, i: int, t: int) -> bool:
        wall = self.allowed.get(i % self.N)
        return wall is None or t % self.cT in (wall, (wall + 1) % self.cT)

    def edge_ok(self, i: int, e: int) -> bool:
        wall = self.allowed.get(i % self.N)
        return wall is None or e % self.cT == wall

    def feasible(self, ia, ib, t1, t2) -> bool:
        """Whether the free samples strictly between two pins admit an edge assignment."""
        e = t1
        for i in self._constrained(ia, ib):
            wall = self.allowed[i % self.N]
            e += (wall - e) % self.cT
            if e >= t2:
                return False
        return True

    def _constrained(self, ia, ib):
        ks = self._keys
        out = []
        for lap in range(ia // self.N, (ib - 1) // self.N + 1):
            base = lap * self.N
            out += [base + k for k in ks if ia < base + k < ib]
        return out

    # chain between two pins ------------------------------------------------

    def chain(self, ia, ib, t1, t2):
        """(cost, free params) of the best chain, or None when infeasible."""
        key = (ia % self.N, ib - ia, t1 % self.cT, t2 - t1)
        if key not in self._chains:
            self._chains[key] = self._solve_chain(key[0], key[0] + key[1], key[2], key[2] + key[3])
        res = self._chains[key]
        if res is None:
            return None
        lift = (t1 - key[2]) // self.cT
        return res[0], res[1] + lift

    def _compositions(self, m, t1, t2, ia):
        E = t2 - t1
        if m == 0:
            yield ()
            return
        total = math.comb(m + E - 1, E - 1)
        if total <= MAX_COMPOSITIONS:
            for splits in itertools.combinations_with_replacement(range(m + 1), E - 1):
                yield splits
            return
        # proportional guess and a small window around it
        span = self.cparam(t2) - self.cparam(t1)
        guess = [round(m * (self.cparam(t1 + j) - self.cparam(t1)) / span) for j in range(1, E)]
        ranges = [range(max(0, g - WINDOW), min(m, g + WINDOW) + 1) for g in guess]
        for splits in itertools.product(*ranges):
            if all(a <= b for a, b in zip(splits, splits[1:])):
                yield splits

    def _solve_chain(self, ia, ib, t1, t2):
        m = ib - ia - 1
        best = None
        seen = set()
        for splits in self._compositions(m, t1, t2, ia):
            res = self._solve_fixed(ia, ib, t1, t2, splits)
            seen.add(splits)
            if res is not None and (best is None or res[0] < best[0] - 1e-15):
                best = (res[0], res[1], splits)
        if best is not None and m and math.comb(m + t2 - t1 - 1, t2 - t1 - 1) > MAX_COMPOSITIONS:
            best = self._descend(ia, ib, t1, t2, best, seen)
        return None if best is None else best[:2]

    def _descend(self, ia, ib, t1, t2, best, seen):
        m = ib - ia - 1
        improved = True
        while improved:
            improved = False
            for j in range(len(best[2])):
                for step in (-1, 1):
                    s = list(best[2])
                    s[j] += step
                    s = tuple(s)
                    if s in seen or not (0 <= s[j] <= m) or any(a > b for a, b in zip(s, s[1:])):
                        continue
                    seen.add(s)
                    res = self._solve_fixed(ia, ib, t1, t2, s)
                    if res is not None and res[0] < best[0] - 1e-15:
                        best = (res[0], res[1], s)
                        improved = True
        return best

    def _solve_fixed(self, ia, ib, t1, t2, splits):
        m = ib - ia - 1
        bounds = [0] + list(splits) + [m]
        edges = np.empty(m, dtype=int)
        for j in range(len(bounds) - 1):
            edges[bounds[j]:bounds[j + 1]] = t1 + j
        for r in range(m):
            if not self.edge_ok(ia + 1 + r, int(edges[r])):
                return None
        n, w = self.N, self.w
        u0, u1 = self.cparam(t1), self.cparam(t2)
        # pair r joins chain point r and r + 1; points -1 and m are the pins
        pa, pb = self.tgt_point(u0), self.tgt_point(u1)
        coef = np.zeros((m + 2, 2))          # point = coef * u + off
        off = np.zeros((m + 2, 2))
        off[0], off[-1] = pa, pb
        for r in range(m):
            coef[r + 1], off[r + 1] = self.edge_form(int(edges[r]))
        ucon = np.zeros(m + 2)
        ucon[0], ucon[-1] = u0, u1
        axis = np.where(self.theta[(ia + np.arange(m + 1)) % n], 0, 1)
        rows = np.arange(m + 1)
        ca0, ca1 = coef[rows, axis], coef[rows + 1, axis]
        # each pair contributes wt * (g1 * u_{r+1} - g0 * u_r + b)^2
        pieces = [(w.lam_e / n, np.ones(m + 1), np.ones(m + 1), ucon[1:] - ucon[:-1] - 1.0 / n),
                  (w.lam_n / n, ca1, ca0, off[rows + 1, axis] - off[rows, axis])]
        diag, sub, q = np.zeros(m + 2), np.zeros(m + 1), np.zeros(m + 2)
        const = 0.0
        for wt, g1, g0, bb in pieces:
            if wt == 0:
                continue
            diag[1:] += 2 * wt * g1 * g1
            diag[:-1] += 2 * wt * g0 * g0
            sub += -2 * wt * g1 * g0
            q[1:] += 2 * wt * bb * g1
            q[:-1] += -2 * wt * bb * g0
            const += wt * float(bb @ bb)
        diag, sub, q = diag[1:-1], sub[1:-1], q[1:-1]
        if m == 0:
            return const, np.zeros(0)
        lb = np.array([self.cparam(int(e)) for e in edges])
        ub = np.array([self.cparam(int(e) + 1) for e in edges])
        lb[0] = max(lb[0], u0 + GAP)
        ub[-1] = min(ub[-1], u1 - GAP)
        x = _chain_qp(diag, sub, q, lb, ub)
        if x is None:
            return None
        f = 0.5 * (diag @ (x * x) + 2 * sub @ (x[:-1] * x[1:])) + q @ x + const
        return float(f), x

    def tgt_point(self, u: float) -> np.ndarray:
        return self.tgt.arc_points(np.array([u % 1.0]))[0] / self.tgt.perimeter


def _chain_qp(diag, sub, q, lb, ub):
    """min 0.5 x'Px + q'x for tridiagonal P, with bounds and x[r] + GAP <= x[r+1]."""
    m = len(q)
    if np.any(lb > ub):
        return None
    ab = np.zeros((2, m))
    ab[0, 1:] = sub
    ab[1] = diag
    try:
        x = solveh_banded(ab, -q) if m > 1 else -q / diag
        if np.all(x >= lb) and np.all(x <= ub) and np.all(np.diff(x) >= GAP):
            return x
    except np.linalg.LinAlgError:
        pass
    P = sp.diags([sub, diag, sub], [-1, 0, 1], format="csc")
    D = sp.diags([np.ones(m - 1), -np.ones(m - 1)], [0, 1], shape=(m - 1, m))
    eye = sp.identity(m, format="csc")
    A = sp.vstack([D, -eye, eye], format="csc")
    b = np.concatenate([np.full(m - 1, -GAP), -lb, ub])
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_threads = 1
    settings.tol_gap_abs = settings.tol_gap_rel = settings.tol_feas = 1e-12
    sol = clarabel.DefaultSolver(sp.triu(P, format="csc"), q, A, b,
                                 [clarabel.NonnegativeConeT(len(b))], settings).solve()
    if str(sol.status) not in ("Solved", "AlmostSolved"):
        return None
    x = np.clip(np.array(sol.x), lb, ub)
    return x


def _portal_setup(src, tgt, portals, n):
    """Outline samples plus, per portal, the samples bracketing it on its source wall.

    Every sample from the bracket start to the bracket end is restricted to
    the target wall, so the whole portal interval maps onto that wall.
    """
    u_s, sigma = source_samples(src, n)
    N = len(u_s)
    idx, allowed, intervals = [], {}, []
    for pp in portals:
        a, b = pp.source.interval()
        ia = int(np.nonzero(u_s <= a + CORNER_TOL)[0][-1])
        after = np.nonzero(u_s >= b - CORNER_TOL)[0]
        ib = int(after[0]) if len(after) else 0
        wall = pp.target.wall
        lo, hi = tgt.edge_interval(wall)
        for i in range(ia, ib + 1) if ia < ib else itertools.chain(range(ia, N), range(0, ib + 1)):
            if allowed.get(i, wall) != wall:
                raise CorrespondenceError("two portals share a bracketing sample; raise the sample count")
            allowed[i] = wall
        idx.append((ia, ib))
        intervals.append((float(a), float(b), lo, hi))
    return u_s, sigma, tuple(idx), allowed, tuple(intervals)


def correspond(src: RectPolygon, tgt: RectPolygon, portals=(), w: CorrespondenceWeights = CorrespondenceWeights()
               ) -> OutlineCorrespondence:
    """Monotone outline map minimizing the correspondence objective.

    ``portals`` pairs source portals with target portals; every source
    portal endpoint must land on the wall that holds its target portal.
    """
    portals = tuple(portals)
    u_s, sigma, idx, allowed, intervals = _portal_setup(src, tgt, portals, w.n)
    pb = _Problem(src, tgt, u_s, sigma, allowed, w)
    found = _search(pb)
    if found is None:
        raise CorrespondenceError("no monotone map keeps every portal on its target wall")
    value, pins, chains = found
    u_t = _assemble(pb, pins, chains)
    obj = objective(src, tgt, u_s, sigma, u_t, w)
    corr = OutlineCorrespondence(src, tgt, u_s, sigma, u_t, pb.theta, idx, intervals, w, obj)
    check(corr)
    return corr


def _starts(pb: _Problem):
    """(first pinned corner, its target corner), nearest offsets first."""
    out = []
    for a, i in enumerate(pb.corners):
        for t in range(pb.cT):
            if pb.pin_ok(i, t):
                d = abs(pb.c[t] - pb.u_s[i])
                out.append((min(d, 1 - d), a, t))
    out.sort()
    return [(a, t) for _, a, t in out]


def _search(pb: _Problem):
    """Best pinned assignment: max pins first when costs cannot outweigh one pin."""
    cS, cT, N = len(pb.corners), pb.cT, pb.N
    K = pb.corners
    lexi = pb.w.cost_bound < 1.0

    def nodes_after(a, t0):
        return [(b, t) for b in range(a + 1, cS) for t in range(t0 + 1, t0 + cT) if pb.pin_ok(K[b], t)]

    best = None
    for a0, t0 in _starts(pb):
        close = (K[a0] + N, t0 + cT)
        states = [(a0, t0)] + [(b, t) for b, t in nodes_after(a0, t0)]

        def sample(s):
            return K[s[0]] if s != close else close[0]

        def tpar(s):
            return s[1]

        # pins-only DP to restrict the costed transitions
        order = sorted(states, key=lambda s: (s[0], s[1]))
        fwd = {s: -1 for s in states}
        fwd[(a0, t0)] = 1
        for s in order:
            if fwd[s] < 0:
                continue
            for s2 in order:
                if s2[0] > s[0] and s2[1] > s[1] and pb.feasible(sample(s), sample(s2), s[1], s2[1]):
                    fwd[s2] = max(fwd[s2], fwd[s] + 1)
        ends = [s for s in states if fwd[s] > 0 and pb.feasible(sample(s), close[0], s[1], close[1])]
        if not ends:
            continue
        top = max(fwd[s] for s in ends)
        if best is not None and lexi and top < -math.floor(best[0]):
            continue
        bwd = {s: -1 for s in states}
        for s in reversed(order):
            if s in ends:
                bwd[s] = 0
            for s2 in order:
                if s2[0] > s[0] and s2[1] > s[1] and bwd[s2] >= 0 and pb.feasible(sample(s), sample(s2), s[1], s2[1]):
                    bwd[s] = max(bwd[s], bwd[s2] + 1)

        def useful(s, s2=None):
            if not lexi:
                return True
            if s2 is None:
                return fwd[s] == top
            return fwd[s] + 1 + bwd[s2] == top

        val = {(a0, t0): (-1.0, None, None)}
        for s in order:
            if s not in val:
                continue
            for s2 in order:
                if not (s2[0] > s[0] and s2[1] > s[1]) or fwd[s2] < 0 or bwd[s2] < 0:
                    continue
                if lexi and (fwd[s] + 1 != fwd[s2] or not useful(s, s2)):
                    continue
                ch = pb.chain(sample(s), sample(s2), s[1], s2[1])
                if ch is None:
                    continue
                v = val[s][0] + ch[0] - 1.0
                if s2 not in val or v < val[s2][0] - 1e-12 * (1 + abs(v)):
                    val[s2] = (v, s, ch)
        for s in order:
            if s not in val or s not in ends or (lexi and not useful(s)):
                continue
            ch = pb.chain(sample(s), close[0], s[1], close[1])
            if ch is None:
                continue
            v = val[s][0] + ch[0]
            if best is None or v < best[0] - 1e-12 * (1 + abs(v)):
                pins, chains = [], []
                cur = s
                chains.append((sample(s), close[0], s[1], close[1], ch[1]))
                while cur is not None:
                    pins.append((sample(cur), cur[1]))
                    prev = val[cur][1]
                    if prev is not None:
                        c = val[cur][2]
                        chains.append((sample(prev), sample(cur), prev[1], cur[1], c[1]))
                    cur = prev
                best = (v, pins[::-1], chains[::-1])
    return best


def _assemble(pb: _Problem, pins, chains) -> np.ndarray:
    N = pb.N
    first = pins[0][0]
    lifted = np.full(N + 1, np.nan)
    for i, t in pins:
        lifted[i - first] = pb.cparam(t)
    lifted[N] = lifted[0] + 1.0
    for ia, ib, t1, t2, xs in chains:
        lifted[ia + 1 - first: ib - first] = xs
    u = np.empty(N)
    for k in range(N):
        i = (first + k) % N
        u[i] = lifted[k] - (1.0 if first + k >= N else 0.0)
    u -= math.floor(u[0])
    return u


def check(corr: OutlineCorrespondence, tol: float = 0.0) -> None:
    """Hard constraints: strict monotonicity and portal containment."""
    u = corr.target_params
    if not (0.0 <= u[0] < 1.0):
        raise CorrespondenceError("first target parameter outside [0, 1)")
    nxt = np.append(u[1:], u[0] + 1.0)
    if np.any(nxt - u <= 0):
        raise CorrespondenceError("target parameters are not strictly increasing")
    for (ia, ib), (_, _, lo, hi) in zip(corr.portal_samples, corr.portal_intervals):
        for i in (ia, ib):
            v = u[i] % 1.0
            ok = lo - tol <= v <= hi + tol or (hi == 1.0 and v <= tol)
            if not ok:
                raise CorrespondenceError(f"portal end sample {i} lands outside its target wall")
