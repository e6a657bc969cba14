"""Plain-text listing of a Program in an LP-like format."""

from __future__ import annotations

import numpy as np

from .program import Program


def _term(c: float, name: str, first: bool) -> str:
    sign = "-" if c < 0 else ("" if first else "+")
    mag = abs(c)
    coef = "" if mag == 1 else f"{mag:.12g} "
    return f"{sign} {coef}{name}".strip() if first else f"{sign} {coef}{name}"


def dump_program(program: Program, fixed: dict[int, float] | None = None) -> str:
    """Objective, rows (with family and subject), bounds and binaries."""
    fixed = dict(program.fixed) | dict(fixed or {})
    names = program.names
    out = ["\\ roomforge layout program", "minimize"]
    obj = []
    q = program.q if program.q is not None else np.zeros(program.n)
    for k in np.flatnonzero(q):
        obj.append(_term(float(q[k]), names[k], not obj))
    quad = []
    if program.P is not None:
        n = program.n
        for i in range(n):
            for j in range(i, n):
                v = program.P[i, j] * (1 if i == j else 2)
                if v != 0:
                    t = f"{names[i]}^2" if i == j else f"{names[i]} * {names[j]}"
                    quad.append(_term(float(v), t, not quad))
    line = " obj: " + (" ".join(obj) if obj else "0")
    if quad:
        line += " + [ " + " ".join(quad) + " ] / 2"
    if program.c:
        line += f" + {program.c:.12g}"
    out.append(line)
    out.append("subject to")
    for r, row in enumerate(program.rows):
        terms = [_term(v, names[k], i == 0) for i, (k, v) in enumerate(sorted(row.coeffs.items()))]
        op = "=" if row.sense == "eq" else "<="
        tag = f"{row.family}{list(row.subject)}"
        if row.relax is not None:
            tag += f" if {names[row.relax[0]]} != {row.relax[1]:g}"
        out.append(f" c{r} [{tag}]: {' '.join(terms) or '0'} {op} {row.rhs:.12g}")
    out.append("bounds")
    for k, nm in enumerate(names):
        if program.binary[k]:
            continue
        out.append(f" {program.lb[k]:.12g} <= {nm} <= {program.ub[k]:.12g}".replace("inf", "+inf"))
    if fixed:
        out.append("fixed")
        for k in sorted(fixed):
            out.append(f" {names[k]} = {fixed[k]:g}")
    out.append("binary")
    for k in program.binaries:
        out.append(f" {names[k]}")
    out.append("end")
    return "\n".join(out) + "\n"
