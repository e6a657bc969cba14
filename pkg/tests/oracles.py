"""Independent oracles for the layout program.

``enumerate_miqp`` solves every binary assignment with an exact dual
active-set QP (quadprog) on the dense rows: no row relaxation, no branch
and bound, equalities eliminated through a null-space basis.
``check_layout`` re-derives every constraint family from named variables and
the initial geometry.
"""

import itertools

import numpy as np
import scipy.linalg
import quadprog


def _independent_rows(A, b, tol=1e-9):
    """Drop linearly dependent equality rows; None if the system is inconsistent."""
    if len(A) == 0:
        return A, b
    _, R, piv = scipy.linalg.qr(A.T, pivoting=True)
    diag = np.abs(np.diag(R)) if R.size else np.zeros(0)
    rank = int((diag > tol * max(1.0, diag.max(initial=0))).sum())
    keep = np.sort(piv[:rank])
    A2, b2 = A[keep], b[keep]
    x = np.linalg.lstsq(A2, b2, rcond=None)[0]
    if np.max(np.abs(A @ x - b), initial=0) > 1e-7 * (1 + np.abs(b).max(initial=0)):
        return None
    return A2, b2


def _implicit_equalities(G, h, tol=1e-12):
    """Split inequality rows into (equalities from opposite pairs, remaining rows)."""
    norm = np.linalg.norm(G, axis=1)
    Gn, hn = G / norm[:, None], h / norm
    dot = Gn @ Gn.T
    opp = (dot <= -1 + tol) & (np.abs(hn[:, None] + hn[None, :]) <= tol * (1 + np.abs(hn)[:, None]))
    i, j = np.nonzero(np.triu(opp, 1))
    pick = np.zeros(len(G), bool)
    pick[i] = True
    drop = pick.copy()
    drop[j] = True
    return Gn[pick], hn[pick], Gn[~drop], hn[~drop]


def solve_fixed(program, assign: dict[int, float]):
    """min over continuous vars with every binary set by ``assign``; (obj, x) or (inf, None)."""
    A, b, eq = program.dense()
    n = program.n
    cont = [k for k in range(n) if k not in assign]
    xb = np.zeros(n)
    for k, v in assign.items():
        xb[k] = v
    Ac = A[:, cont]
    rhs = b - A @ xb
    const = ~Ac.any(axis=1)
    if np.any(np.abs(rhs[const & eq]) > 1e-9) or np.any(rhs[const & ~eq] < -1e-9):
        return np.inf, None
    Ae, be = Ac[eq & ~const], rhs[eq & ~const]
    lb = np.array(program.lb)[cont]
    ub = np.array(program.ub)[cont]
    G = [Ac[~eq & ~const]]
    h = [rhs[~eq & ~const]]
    m = len(cont)
    I = np.eye(m)
    G += [-I[np.isfinite(lb)], I[np.isfinite(ub)]]
    h += [-lb[np.isfinite(lb)], ub[np.isfinite(ub)]]
    G = np.vstack(G)
    h = np.concatenate(h)
    Ge, he, G, h = _implicit_equalities(G, h)
    Ae, be = np.vstack([Ae.reshape(-1, m), Ge]), np.concatenate([be, he])
    if _independent_rows(Ae, be) is None:
        return np.inf, None
    P = program.P[np.ix_(cont, cont)]
    q = program.q[cont] + program.P[np.ix_(cont, range(n))] @ xb
    # eliminate equalities: xc = x0 + N z
    if len(Ae):
        x0 = np.linalg.lstsq(Ae, be, rcond=None)[0]
        N = scipy.linalg.null_space(Ae)
    else:
        x0, N = np.zeros(m), np.eye(m)
    if N.shape[1] == 0:
        z = np.zeros(0)
        if np.any(G @ x0 - h > 1e-7):
            return np.inf, None
    else:
        Pz = N.T @ P @ N
        Pz = (Pz + Pz.T) / 2
        qz = N.T @ (P @ x0 + q)
        try:
            # a 1e-9 slab keeps the dual active set away from degenerate vertices
            slack = h - G @ x0 + 1e-9 * (1 + np.abs(h))
            z = quadprog.solve_qp(Pz, -qz, -(G @ N).T, -slack)[0]
        except ValueError:  # inconsistent constraints
            return np.inf, None
    x = xb.copy()
    x[cont] = x0 + N @ z
    viol = max(np.max(np.abs(A[eq] @ x - b[eq]), initial=0), np.max(A[~eq] @ x - b[~eq], initial=0))
    if viol > 1e-6:
        return np.inf, None
    return float(0.5 * x @ program.P @ x + program.q @ x + program.c), x


def enumerate_miqp(program, fixed=None):
    """Exhaustive minimum over all assignments of the free binaries."""
    fixed = dict(program.fixed) | dict(fixed or {})
    free = [k for k in program.binaries if k not in fixed]
    best, best_x = np.inf, None
    for bits in itertools.product((0.0, 1.0), repeat=len(free)):
        assign = dict(fixed)
        assign.update(zip(free, bits))
        obj, x = solve_fixed(program, assign)
        if obj < best:
            best, best_x = obj, x
    return best, best_x


# --- independent constraint checker ------------------------------------------


def _named(lp, x):
    names = lp.program.names
    return {n: float(v) for n, v in zip(names, x)}


def _rect(v, lab):
    return v[f"x[{lab}]"], v[f"y[{lab}]"], v[f"w[{lab}]"], v[f"h[{lab}]"]


def _spans(rects):
    """Per column: cell nearest the bbox mid-y (ties: upper); per row likewise."""
    x0 = min(r.x for r in rects)
    x1 = max(r.x2 for r in rects)
    y0 = min(r.y for r in rects)
    y1 = max(r.y2 for r in rects)
    my, mx = (y0 + y1) / 2, (x0 + x1) / 2
    cols, rows = {}, {}
    for k, r in enumerate(rects):
        cols.setdefault(r.x, []).append(k)
        rows.setdefault(r.y, []).append(k)
    sx = [min(ks, key=lambda k: (abs(rects[k].y + rects[k].h / 2 - my), rects[k].y)) for _, ks in sorted(cols.items())]
    sy = [min(ks, key=lambda k: (abs(rects[k].x + rects[k].w / 2 - mx), rects[k].x)) for _, ks in sorted(rows.items())]
    return sx, sy


def check_layout(lp, x, tol=1e-6):
    """List of human-readable violations of the layout constraint families."""
    v = _named(lp, x)
    o = lp.options
    out = []
    for n, val in v.items():
        if val < -tol:
            out.append(f"negative {n}")
    for n in lp.program.names:
        if n[:2] in ("sT", "sB", "sL", "sR", "sA", "th") and min(abs(v[n]), abs(v[n] - 1)) > tol:
            out.append(f"fractional {n}")
    rooms = {}
    for i, lab in enumerate(lp.labels):
        rooms.setdefault(lp.rect_room[i], []).append(i)
    solved = {lab: _rect(v, lab) for lab in lp.labels}
    for r, ids in rooms.items():
        init = [lp.rects[i] for i in ids]
        for i in ids:
            xi, yi, wi, hi = solved[lp.labels[i]]
            if wi < min(o.min_extent, 0.5 * lp.rects[i].w) - tol or hi < min(o.min_extent, 0.5 * lp.rects[i].h) - tol:
                out.append(f"degenerate {lp.labels[i]}")
            if xi + wi > lp.X + tol or yi + hi > lp.Y + tol:
                out.append(f"outside box {lp.labels[i]}")
        sx, sy = _spans(init)
        if sum(solved[lp.labels[ids[k]]][2] for k in sx) < o.min_room_size - tol:
            out.append(f"room {r} too narrow")
        if sum(solved[lp.labels[ids[k]]][3] for k in sy) < o.min_room_size - tol:
            out.append(f"room {r} too short")
        for a in ids:
            for b in ids:
                ra, rb = lp.rects[a], lp.rects[b]
                sa, sb = solved[lp.labels[a]], solved[lp.labels[b]]
                if ra.x2 == rb.x and ra.y == rb.y and ra.h == rb.h:
                    if max(abs(sa[0] + sa[2] - sb[0]), abs(sa[1] - sb[1]), abs(sa[3] - sb[3])) > tol:
                        out.append(f"split seam {lp.labels[a]}|{lp.labels[b]}")
                if ra.y2 == rb.y and ra.x == rb.x and ra.w == rb.w:
                    if max(abs(sa[1] + sa[3] - sb[1]), abs(sa[0] - sb[0]), abs(sa[2] - sb[2])) > tol:
                        out.append(f"split seam {lp.labels[a]}/{lp.labels[b]}")
    labs = lp.labels
    for i in range(len(labs)):
        for j in range(i + 1, len(labs)):
            if lp.rect_room[i] == lp.rect_room[j]:
                continue
            xi, yi, wi, hi = solved[labs[i]]
            xj, yj, wj, hj = solved[labs[j]]
            ox = min(xi + wi, xj + wj) - max(xi, xj)
            oy = min(yi + hi, yj + hj) - max(yi, yj)
            if ox > tol and oy > tol:
                out.append(f"overlap {labs[i]} {labs[j]} by {min(ox, oy):.3g}")
            key = f"[{labs[i]},{labs[j]}]"
            if f"sT{key}" not in v:
                continue
            holds = {"T": yj - (yi + hi), "B": yi - (yj + hj), "L": xj - (xi + wi), "R": xi - (xj + wj)}
            on = [D for D in "TBLR" if v[f"s{D}{key}"] > 0.5]
            if not on:
                out.append(f"no direction {key}")
            for D in on:
                if holds[D] < -tol:
                    out.append(f"direction {D} broken {key}")
            if v[f"sA{key}"] > 0.5:
                if v[f"th{key}"] > 0.5:
                    ok = ox >= o.adjacency_length - tol and oy >= -tol
                else:
                    ok = oy >= o.adjacency_length - tol and ox >= -tol
                if not ok:
                    out.append(f"adjacency claimed {key}")
    # portals: anchored on the same wall line, inside its extent, pairs coincide
    for pv in lp.portals:
        lab = f"r{pv.room}p{pv.portal}"
        px, py, pr = v[f"px[{lab}]"], v[f"py[{lab}]"], v[f"pr[{lab}]"]
        placed = lp.fp.rooms[pv.room]
        a, b = placed.portal_segment(pv.portal)
        a, b = a + lp.offset, b + lp.offset
        wall = placed.room.portals[pv.portal].facing
        ids = rooms[pv.room]
        if wall in ("left", "right"):
            line = a[0]
            cells = [i for i in ids if (lp.rects[i].x if wall == "left" else lp.rects[i].x2) == line]
            ext = _wall_run(lp, cells, (a[1] + b[1]) / 2, vertical=True)
            s = [solved[labs[i]] for i in ext]
            wx = s[0][0] if wall == "left" else s[0][0] + s[0][2]
            lo, hi = min(c[1] for c in s), max(c[1] + c[3] for c in s)
            if abs(px - wx) > tol or py - pr < lo - tol or py + pr > hi + tol:
                out.append(f"portal {lab} off wall")
        else:
            line = a[1]
            cells = [i for i in ids if (lp.rects[i].y if wall == "up" else lp.rects[i].y2) == line]
            ext = _wall_run(lp, cells, (a[0] + b[0]) / 2, vertical=False)
            s = [solved[labs[i]] for i in ext]
            wy = s[0][1] if wall == "up" else s[0][1] + s[0][3]
            lo, hi = min(c[0] for c in s), max(c[0] + c[2] for c in s)
            if abs(py - wy) > tol or px - pr < lo - tol or px + pr > hi + tol:
                out.append(f"portal {lab} off wall")
    for p, q in lp.fp.pairings:
        la, lb_ = f"r{p[0]}p{p[1]}", f"r{q[0]}p{q[1]}"
        for c in ("px", "py", "pr"):
            if abs(v[f"{c}[{la}]"] - v[f"{c}[{lb_}]"]) > tol:
                out.append(f"pair {la} {lb_} differs in {c}")
    return out


def _wall_run(lp, cells, at, vertical):
    """Contiguous run of wall cells (in initial geometry) containing coordinate ``at``."""
    key = (lambda i: (lp.rects[i].y, lp.rects[i].y2)) if vertical else (lambda i: (lp.rects[i].x, lp.rects[i].x2))
    cells = sorted(cells, key=key)
    runs, cur = [], []
    for i in cells:
        if cur and key(cur[-1])[1] != key(i)[0]:
            runs.append(cur)
            cur = []
        cur.append(i)
    runs.append(cur)
    for run in runs:
        if key(run[0])[0] <= at <= key(run[-1])[1]:
            return run
    raise AssertionError("portal not on a wall run")


def layout_objective(lp, x):
    """Objective re-evaluated from named values and initial geometry."""
    v = _named(lp, x)
    o = lp.options
    f = 0.0
    for i, lab in enumerate(lp.labels):
        r = lp.rects[i]
        xi, yi, wi, hi = _rect(v, lab)
        f += o.lam_shape * ((wi - r.w) ** 2 + (hi - r.h) ** 2)
        f += o.lam_position * ((xi - r.x) ** 2 + (yi - r.y) ** 2)
    for pv in lp.portals:
        lab = f"r{pv.room}p{pv.portal}"
        px0, py0, pr0 = pv.init
        f += o.lam_radius * (v[f"pr[{lab}]"] - pr0) ** 2
        fl, ll = lp.labels[pv.first], lp.labels[pv.last]
        rf, rl = lp.rects[pv.first], lp.rects[pv.last]
        if pv.facing in ("left", "right"):
            p, p0 = v[f"py[{lab}]"], py0
            f += o.lam_slide * ((p - v[f"y[{fl}]"] - (p0 - rf.y)) ** 2 + (p - v[f"y[{ll}]"] - (p0 - rl.y)) ** 2)
        else:
            p, p0 = v[f"px[{lab}]"], px0
            f += o.lam_slide * ((p - v[f"x[{fl}]"] - (p0 - rf.x)) ** 2 + (p - v[f"x[{ll}]"] - (p0 - rl.x)) ** 2)
    for (i, j), pair in lp.pairs.items():
        if lp.gate[(i, j)]:
            f -= o.lam_adjacent * v[f"sA[{lp.labels[i]},{lp.labels[j]}]"]
    return f
