"""Depth-first branch and bound over the binaries of a Program."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .program import Program
from .qp import solve_qp

OPTIMAL, FEASIBLE, INFEASIBLE, NO_SOLUTION = "optimal", "feasible", "infeasible", "no_solution"


@dataclass
class MiqpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("inf")
    nodes: int = 0
    incumbents: list[float] = field(default_factory=list)
    elapsed: float = 0.0
    names: list[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE)

    def value(self, name: str) -> float:
        return float(self.x[self.names.index(name)])

    def as_dict(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.x)} if self.x is not None else {}


def _improves(obj: float, best: float) -> bool:
    return obj < best - 1e-9 * (1 + abs(best)) if np.isfinite(best) else np.isfinite(obj)


def _relaxation(program: Program, fixed: dict[int, float], polish: bool = True):
    red = program.reduce(fixed, tol=1e-9)
    if red is None:
        return None, float("inf")
    keep, P, q, c, A_eq, b_eq, A_le, b_le, lb, ub = red
    res = solve_qp(P, q, A_eq, b_eq, A_le, b_le, lb, ub, polish=polish)
    if res.status != "optimal":
        return None, float("inf")
    x = np.zeros(program.n)
    for k, v in fixed.items():
        x[k] = v
    x[keep] = res.x
    return x, res.obj + c


def solve(program: Program, time_limit: float = 60.0, node_limit: int = 100_000,
          fixed: dict[int, float] | None = None, int_tol: float = 1e-6) -> MiqpSolution:
    """Minimize the program; binaries not in ``fixed`` (or ``program.fixed``) are branched on.

    Branching takes the most fractional binary (lowest index on ties) and
    explores its 1-child first: separation binaries come in at-least-one
    groups, so diving on ones reaches integer points quickly.  Interior
    nodes use the plain interior-point bound; leaves are polished.  ``node_limit``
    gives a deterministic budget; ``time_limit`` is a wall-clock guard.
    """
    t0 = time.perf_counter()
    root = dict(program.fixed)
    root.update(fixed or {})
    free = program.free_binaries(root)
    stack = [root]
    best_x, best = None, float("inf")
    history: list[float] = []
    nodes = 0
    complete = True
    while stack:
        if nodes >= node_limit or time.perf_counter() - t0 > time_limit:
            complete = False
            break
        fx = stack.pop()
        nodes += 1
        x, obj = _relaxation(program, fx, polish=False)
        if x is None or not _improves(obj, best):
            continue
        open_ = [k for k in free if k not in fx]
        frac = [(min(x[k], 1 - x[k]), -k) for k in open_ if min(abs(x[k]), abs(1 - x[k])) > int_tol]
        if not frac:
            leaf = dict(fx)
            leaf.update({k: float(round(x[k])) for k in open_})
            if len(leaf) != len(fx):
                nodes += 1
            x, obj = _relaxation(program, leaf)
            if x is not None and _improves(obj, best):
                best, best_x = obj, x
                history.append(obj)
            continue
        _, negk = max(frac)
        k = -negk
        down = dict(fx)
        down[k] = 0.0
        up = dict(fx)
        up[k] = 1.0
        stack.append(down)
        stack.append(up)
    if best_x is not None:
        for k in program.binaries:
            best_x[k] = round(best_x[k])
    status = (OPTIMAL if best_x is not None else INFEASIBLE) if complete else \
        (FEASIBLE if best_x is not None else NO_SOLUTION)
    return MiqpSolution(status, best_x, best, nodes, history, time.perf_counter() - t0, list(program.names))
