"""Mixed-integer layout snapping."""

from .bnb import FEASIBLE, INFEASIBLE, NO_SOLUTION, OPTIMAL, MiqpSolution, solve
from .dump import dump_program
from .layout import (
    LayoutError,
    LayoutOptions,
    LayoutProgram,
    LayoutResult,
    apply_solution,
    build_program,
    solve_layout,
    warm_start,
)
from .program import Program, Row
from .qp import solve_qp

__all__ = [
    "FEASIBLE", "INFEASIBLE", "NO_SOLUTION", "OPTIMAL", "MiqpSolution", "solve", "dump_program",
    "LayoutError", "LayoutOptions", "LayoutProgram", "LayoutResult", "apply_solution", "build_program",
    "solve_layout", "warm_start", "Program", "Row", "solve_qp",
]
