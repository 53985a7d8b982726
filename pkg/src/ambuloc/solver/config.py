"""Solver selection shared by sweeps, scenarios and the CLI."""

from __future__ import annotations

from dataclasses import dataclass

from ..formulation import ModelSpec
from ..plan import Plan
from .exact import solve_exact
from .heuristic import solve_heuristic
from .solution import Solution

METHODS = ("exact", "heuristic")


@dataclass(frozen=True)
class SolverConfig:
    method: str = "exact"
    time_limit: float | None = None
    seed: int = 0
    budget: int = 20000
    warm_start: bool = True  # heuristic sweeps seed each epsilon with the previous plan
    jobs: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.budget < 0 or self.jobs < 1:
            raise ValueError("budget must be >= 0 and jobs >= 1")


def solve(model: ModelSpec, config: SolverConfig, initial: Plan | None = None) -> Solution:
    if config.method == "exact":
        return solve_exact(model, time_limit=config.time_limit)
    return solve_heuristic(
        model, seed=config.seed, budget=config.budget, initial=initial, time_limit=config.time_limit
    )
