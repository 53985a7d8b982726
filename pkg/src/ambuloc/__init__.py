"""Multi-period ambulance location: coverage models, exact and heuristic solvers,
epsilon-constraint sweeps and scenario comparisons."""

from .coverage import CoverageSets, ReliabilityTable, build_coverage_sets, build_reliability_table, reliability
from .formulation import (
    DETERMINISTIC,
    PROBABILISTIC,
    ModelSpec,
    add_epsilon_constraint,
    build_model,
    fix_variables,
)
from .generator import GeneratorConfig, generate_instance
from .instance import Instance, load_instance, make_instance, save_instance
from .plan import Plan, baseline_plan_load, load_plan, save_plan

__version__ = "0.1.0"

__all__ = [
    "CoverageSets",
    "DETERMINISTIC",
    "GeneratorConfig",
    "Instance",
    "ModelSpec",
    "PROBABILISTIC",
    "Plan",
    "ReliabilityTable",
    "__version__",
    "add_epsilon_constraint",
    "baseline_plan_load",
    "build_coverage_sets",
    "build_model",
    "build_reliability_table",
    "fix_variables",
    "generate_instance",
    "load_instance",
    "load_plan",
    "make_instance",
    "reliability",
    "save_instance",
    "save_plan",
]
