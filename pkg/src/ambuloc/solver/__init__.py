"""Exact, heuristic and file-based solution of location models."""

from .compiled import Compiled, compile_model
from .config import METHODS, SolverConfig, solve
from .exact import BranchAndBound, solve_exact
from .heuristic import solve_heuristic
from .mps import export_mps, import_solution, read_mps, write_mps
from .solution import (
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    TIME_LIMIT,
    AuditError,
    Solution,
    audit,
    decode,
)

__all__ = [
    "AuditError",
    "BranchAndBound",
    "Compiled",
    "FEASIBLE",
    "INFEASIBLE",
    "METHODS",
    "OPTIMAL",
    "Solution",
    "SolverConfig",
    "TIME_LIMIT",
    "audit",
    "compile_model",
    "decode",
    "export_mps",
    "import_solution",
    "read_mps",
    "solve",
    "solve_exact",
    "solve_heuristic",
    "write_mps",
]
