"""Convex QP relaxation solver: interior point (Clarabel) plus an active-set polish."""

from __future__ import annotations

from dataclasses import dataclass

import clarabel
import numpy as np
import scipy.sparse as sp

_OK = {"Solved", "AlmostSolved"}
_INFEASIBLE = {"PrimalInfeasible", "AlmostPrimalInfeasible"}


@dataclass
class QPResult:
    status: str  # optimal | infeasible | failed
    x: np.ndarray | None = None
    obj: float = float("inf")


def _settings():
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.max_threads = 1
    s.tol_gap_abs = 1e-10
    s.tol_gap_rel = 1e-10
    s.tol_feas = 1e-10
    s.max_iter = 400
    return s


def _polish(P, q, A_eq, b_eq, A_in, b_in, x0, f0):
    n = len(x0)
    scale_in = 1.0 + np.abs(b_in)
    scale_eq = 1.0 + np.abs(b_eq)
    for thresh in (1e-6, 1e-8, 1e-5, 1e-4):
        active = (b_in - A_in @ x0) <= thresh * scale_in
        G = np.vstack([A_eq, A_in[active]])
        h = np.concatenate([b_eq, b_in[active]])
        m = len(G)
        K = np.zeros((n + m, n + m))
        K[:n, :n] = P
        K[:n, n:] = G.T
        K[n:, :n] = G
        sol = np.linalg.lstsq(K, np.concatenate([-q, h]), rcond=1e-13)[0]
        x = sol[:n]
        if A_eq.size and np.max(np.abs(A_eq @ x - b_eq) / scale_eq) > 1e-10:
            continue
        if A_in.size and np.max((A_in @ x - b_in) / scale_in) > 1e-10:
            continue
        f = 0.5 * x @ P @ x + q @ x
        if f <= f0 + 1e-9 * (1 + abs(f0)):
            return x
    return None


def solve_qp(P, q, A_eq, b_eq, A_le, b_le, lb, ub, polish: bool = True) -> QPResult:
    """min 0.5 x'Px + q'x  s.t.  A_eq x = b_eq, A_le x <= b_le, lb <= x <= ub.

    ``polish`` re-solves the KKT system on the detected active set, which
    makes vertex-like solutions exact to round-off.
    """
    P = np.asarray(P, float)
    q = np.asarray(q, float)
    n = len(q)
    if n == 0:
        ok = (not len(b_eq) or np.all(np.abs(b_eq) <= 1e-9)) and (not len(b_le) or np.all(b_le >= -1e-9))
        return QPResult("optimal", np.zeros(0), 0.0) if ok else QPResult("infeasible")
    A_eq = np.asarray(A_eq, float).reshape(-1, n)
    b_eq = np.asarray(b_eq, float).ravel()
    A_le = np.asarray(A_le, float).reshape(-1, n)
    lb, ub = np.asarray(lb, float), np.asarray(ub, float)
    fl, fu = np.nonzero(np.isfinite(lb))[0], np.nonzero(np.isfinite(ub))[0]
    dense = np.vstack([A_eq, A_le])
    r, c = np.nonzero(dense)
    m0 = len(dense)
    rows = np.concatenate([r, m0 + np.arange(len(fl)), m0 + len(fl) + np.arange(len(fu))])
    cols = np.concatenate([c, fl, fu])
    vals = np.concatenate([dense[r, c], -np.ones(len(fl)), np.ones(len(fu))])
    m = m0 + len(fl) + len(fu)
    A = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
    b_in = np.concatenate([np.asarray(b_le, float).ravel(), -lb[fl], ub[fu]])
    b = np.concatenate([b_eq, b_in])
    cones = []
    if len(b_eq):
        cones.append(clarabel.ZeroConeT(len(b_eq)))
    if len(b_in):
        cones.append(clarabel.NonnegativeConeT(len(b_in)))
    Pu = sp.csc_matrix(np.triu(P))
    sol = clarabel.DefaultSolver(Pu, q, A, b, cones, _settings()).solve()
    status = str(sol.status)
    if status in _INFEASIBLE:
        return QPResult("infeasible")
    x0 = np.array(sol.x)
    f0 = float(0.5 * x0 @ P @ x0 + q @ x0)
    x = _polish(P, q, A_eq, b_eq, A[len(b_eq):].toarray(), b_in, x0, f0) if polish else None
    if x is None:
        if status not in _OK:
            return QPResult("failed")
        x = x0
    return QPResult("optimal", x, float(0.5 * x @ P @ x + q @ x))
