"""Generic mixed-integer convex QP container.

The objective is ``0.5 x'Px + q'x + c`` over variables with box bounds;
constraints are rows ``a'x = b`` or ``a'x <= b``.  A row may carry a
relaxation trigger ``(var, value)``: once that binary is fixed to
``value`` the row is implied by the variable box and the bounding-box
rows, so it can be dropped from the reduced QP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Row:
    coeffs: dict[int, float]
    sense: str  # "eq" | "le"
    rhs: float
    family: str
    subject: tuple = ()
    relax: tuple[int, float] | None = None


@dataclass
class Program:
    names: list[str] = field(default_factory=list)
    binary: list[bool] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    initial: list[float] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    P: np.ndarray | None = None
    q: np.ndarray | None = None
    c: float = 0.0
    fixed: dict[int, float] = field(default_factory=dict)
    _index: dict[str, int] = field(default_factory=dict, repr=False)
    _cache: tuple | None = field(default=None, repr=False, compare=False)

    # --- building ---------------------------------------------------------

    def add_var(self, name: str, lb=0.0, ub=np.inf, binary=False, init=0.0) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name}")
        k = len(self.names)
        self.names.append(name)
        self.binary.append(binary)
        self.lb.append(0.0 if binary else float(lb))
        self.ub.append(1.0 if binary else float(ub))
        self.initial.append(float(init))
        self._index[name] = k
        return k

    def var(self, name: str) -> int:
        return self._index[name]

    def has(self, name: str) -> bool:
        return name in self._index

    def add_row(self, coeffs: dict[int, float], sense: str, rhs: float, family: str,
                subject: tuple = (), relax=None) -> None:
        if sense == "ge":
            coeffs = {k: -v for k, v in coeffs.items()}
            rhs, sense = -rhs, "le"
        if sense not in ("eq", "le"):
            raise ValueError(sense)
        merged: dict[int, float] = {}
        for k, v in coeffs.items():
            merged[k] = merged.get(k, 0.0) + v
        merged = {k: v for k, v in merged.items() if v != 0.0}
        self.rows.append(Row(merged, sense, float(rhs), family, subject, relax))

    def start_objective(self):
        n = len(self.names)
        self.P = np.zeros((n, n))
        self.q = np.zeros(n)
        self.c = 0.0

    def add_square(self, coeffs: dict[int, float], target: float, weight: float) -> None:
        """Add ``weight * (a'x - target)^2``."""
        if weight == 0:
            return
        idx = np.array(list(coeffs), dtype=int)
        a = np.array([coeffs[k] for k in idx])
        self.P[np.ix_(idx, idx)] += 2 * weight * np.outer(a, a)
        self.q[idx] += -2 * weight * target * a
        self.c += weight * target * target

    def add_linear(self, k: int, coef: float) -> None:
        self.q[k] += coef

    # --- queries ----------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def binaries(self) -> list[int]:
        return [k for k, b in enumerate(self.binary) if b]

    @property
    def continuous(self) -> list[int]:
        return [k for k, b in enumerate(self.binary) if not b]

    def free_binaries(self, fixed: dict[int, float] | None = None) -> list[int]:
        fx = self.fixed if fixed is None else fixed
        return [k for k in self.binaries if k not in fx]

    def objective(self, x) -> float:
        x = np.asarray(x, float)
        return float(0.5 * x @ self.P @ x + self.q @ x + self.c)

    def dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(A, b, is_eq) over all rows."""
        A = np.zeros((len(self.rows), self.n))
        b = np.zeros(len(self.rows))
        eq = np.zeros(len(self.rows), bool)
        for r, row in enumerate(self.rows):
            for k, v in row.coeffs.items():
                A[r, k] = v
            b[r] = row.rhs
            eq[r] = row.sense == "eq"
        return A, b, eq

    def max_violation(self, x) -> float:
        """Largest violation over rows, bounds and integrality."""
        x = np.asarray(x, float)
        worst = 0.0
        for row in self.rows:
            v = sum(c * x[k] for k, c in row.coeffs.items()) - row.rhs
            worst = max(worst, abs(v) if row.sense == "eq" else v)
        lb, ub = np.array(self.lb), np.array(self.ub)
        worst = max(worst, float(np.max(lb - x, initial=0)), float(np.max(x - ub, initial=0)))
        for k in self.binaries:
            worst = max(worst, min(abs(x[k]), abs(x[k] - 1)))
        return worst

    def _compiled(self):
        """Dense rows plus relaxation triggers, rebuilt when rows were added."""
        cache = self._cache
        if cache is None or cache[0] != (len(self.rows), self.n):
            A, b, eq = self.dense()
            rv = np.array([r.relax[0] if r.relax is not None else -1 for r in self.rows], dtype=int)
            rval = np.array([r.relax[1] if r.relax is not None else np.nan for r in self.rows])
            cache = ((len(self.rows), self.n), A, b, eq, rv, rval)
            self._cache = cache
        return cache[1:]

    def _split(self, fixed: dict[int, float]):
        A, b, eq, rv, rval = self._compiled()
        n = self.n
        mask = np.zeros(n, bool)
        xf = np.zeros(n)
        if fixed:
            idx = np.fromiter(fixed.keys(), dtype=int, count=len(fixed))
            mask[idx] = True
            xf[idx] = np.fromiter(fixed.values(), dtype=float, count=len(fixed))
        live = np.ones(len(b), bool)
        has = rv >= 0
        live[has] = ~(mask[rv[has]] & (xf[rv[has]] == rval[has]))
        keep = np.nonzero(~mask)[0]
        Ak = A[live][:, keep]
        rhs = b[live] - A[live] @ xf
        const = ~Ak.any(axis=1)
        return keep, xf, Ak, rhs, eq[live], const

    def reduce(self, fixed: dict[int, float], tol: float | None = None):
        """QP over the variables not in ``fixed`` (fixed values substituted).

        Returns (keep, P, q, c, A_eq, b_eq, A_le, b_le, lb, ub); ``keep``
        maps reduced positions back to program indices.  With ``tol`` set,
        returns None instead when a fully fixed row is violated.
        """
        keep, xf, Ak, rhs, eq, const = self._split(fixed)
        if tol is not None and not self._constants_hold(rhs, eq, const, tol):
            return None
        P = self.P[np.ix_(keep, keep)]
        q = self.q[keep] + self.P[keep] @ xf
        c = float(0.5 * xf @ self.P @ xf + self.q @ xf + self.c)
        use = ~const
        A_eq, b_eq = Ak[use & eq], rhs[use & eq]
        A_le, b_le = Ak[use & ~eq], rhs[use & ~eq]
        lb = np.array(self.lb)[keep]
        ub = np.array(self.ub)[keep]
        return keep, P, q, c, A_eq, b_eq, A_le, b_le, lb, ub

    @staticmethod
    def _constants_hold(rhs, eq, const, tol) -> bool:
        v = -rhs[const]
        e = eq[const]
        return not (np.any(np.abs(v[e]) > tol) or np.any(v[~e] > tol))

    def constant_rows_ok(self, fixed: dict[int, float], tol=1e-9) -> bool:
        """Rows whose variables are all fixed must hold on their own."""
        _, _, _, rhs, eq, const = self._split(fixed)
        return self._constants_hold(rhs, eq, const, tol)
