"""Solutions, the independent objective/constraint audit, and decoding into Plans."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..formulation import ModelSpec, VarId
from ..instance import Instance
from ..plan import Plan

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
TIME_LIMIT = "time-limit"
STATUSES = (OPTIMAL, FEASIBLE, INFEASIBLE, TIME_LIMIT)


class AuditError(RuntimeError):
    """An assignment violates a constraint or its reported objective is wrong."""

    def __init__(self, tag: str, message: str, index: int | None = None):
        super().__init__(f"{tag}: {message}")
        self.tag = tag
        self.index = index


@dataclass
class Solution:
    assignment: dict[VarId, int]
    objective: Fraction
    status: str
    bound: Fraction | None = None
    stats: dict = field(default_factory=dict)

    @property
    def has_incumbent(self) -> bool:
        return bool(self.assignment)

    @property
    def gap(self) -> Fraction | None:
        if self.bound is None:
            return None
        return self.bound - self.objective

    def value(self, v: VarId) -> int:
        return self.assignment.get(v, 0)


def audit(model: ModelSpec, assignment: dict[VarId, int], objective: Fraction | None = None) -> Fraction:
    """Recompute the objective from scratch and check every constraint exactly.

    Variables missing from ``assignment`` count as 0.  Returns the objective.
    """
    for v, val in assignment.items():
        if val not in (0, 1):
            raise AuditError("binary", f"{v.name} = {val}")
    for n, con in enumerate(model.constraints):
        if not con.satisfied(assignment):
            lhs = con.activity(assignment)
            raise AuditError(con.tag, f"constraint {n} violated: lhs {lhs} {con.relation} {con.rhs} fails", n)
    value = model.objective_value(assignment)
    if objective is not None and value != objective:
        raise AuditError("objective", f"reported {objective} but assignment scores {value}")
    return value


def decode(solution: Solution, instance: Instance, model: ModelSpec) -> Plan:
    """Audit ``solution`` and turn it into a Plan with coverage rates.

    Rates divide covered demand by total demand over all periods; for the
    probabilistic models the covered demand is the reliability-weighted objective
    contribution.  Static models use the period-summed demand, so the denominators
    coincide with the multi-period ones.
    """
    if solution.status == INFEASIBLE or not solution.has_incumbent:
        raise AuditError("status", f"cannot decode a solution with status {solution.status!r} and no assignment")
    objective = audit(model, solution.assignment, solution.objective)
    values = solution.assignment
    opened = frozenset(v.index[0] for v in model.variables if v.family == "z" and values.get(v, 0))
    alloc = {v.index: 1 for v in model.variables if v.family == "x" and values.get(v, 0)}
    periods = model.metadata.get("num_periods", instance.num_periods)

    covered = {u: Fraction(0) for u in range(instance.n_types)}
    covered_ut: dict[tuple[int, int], Fraction] = {}
    for v, coef in model.objective:
        if v.family.startswith("y") and values.get(v, 0):
            u, t = v.index[1], v.index[-1]
            covered[u] += coef
            covered_ut[u, t] = covered_ut.get((u, t), Fraction(0)) + coef

    totals = {u: instance.total_demand(u) for u in range(instance.n_types)}
    grand = sum(totals.values(), Fraction(0))
    rate_by_type = {u: (covered[u] / totals[u] if totals[u] else None) for u in covered}
    period_rates = {}
    if periods == instance.num_periods and not model.metadata.get("static", False):
        pts = instance.demand_points
        for u in range(instance.n_types):
            for t in range(periods):
                tot = sum((p.demand[u][t] for p in pts), Fraction(0))
                period_rates[u, t] = covered_ut.get((u, t), Fraction(0)) / tot if tot else None
    total_rate = sum(covered.values(), Fraction(0)) / grand if grand else Fraction(0)
    return Plan(
        opened,
        alloc,
        periods,
        objective=objective,
        covered_by_type=covered,
        rate_by_type=rate_by_type,
        period_rates=period_rates,
        total_rate=total_rate,
    )
