"""The S1-S5 scenario ladder, from a fixed baseline to fully optimized relocation.

====  ==========  ==============  ====================
id    fixes       periods         what is optimized
====  ==========  ==============  ====================
S1    z and x     multi-period    nothing (baseline)
S2    z only      static          one allocation
S3    z only      multi-period    per-period allocation
S4    none        static          stations + allocation
S5    none        multi-period    stations + relocation
====  ==========  ==============  ====================

Static scenarios are optimized on the period-aggregated model and their plans are
then replicated over all periods and scored with the multi-period model, so every
row is measured against the same total demand.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .coverage import CoverageSets, ReliabilityTable, build_coverage_sets, build_reliability_table
from .formulation import (
    DETERMINISTIC,
    PROBABILISTIC,
    ModelSpec,
    add_epsilon_constraint,
    build_model,
    fix_variables,
    require_open,
)
from .instance import Instance
from .plan import Plan, check_plan, replicate_plan
from .solver import INFEASIBLE, OPTIMAL, SolverConfig, decode, solve, solve_exact

SCENARIOS = ("S1", "S2", "S3", "S4", "S5")
_RULES = {
    "S1": ("z-and-x", "multi-period"),
    "S2": ("z-only", "static-aggregated"),
    "S3": ("z-only", "multi-period"),
    "S4": ("none", "static-aggregated"),
    "S5": ("none", "multi-period"),
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    model_kind: str = DETERMINISTIC
    fixes: str | None = None
    periods: str | None = None
    baseline: Plan | None = field(default=None, compare=False)
    epsilon: int | None = None  # station cap for the free scenarios (S4, S5)

    def __post_init__(self):
        if self.id not in _RULES:
            raise ScenarioError(f"unknown scenario {self.id!r}; expected one of {SCENARIOS}")
        if self.model_kind not in (DETERMINISTIC, PROBABILISTIC):
            raise ScenarioError(f"unknown model kind {self.model_kind!r}")
        fixes, periods = _RULES[self.id]
        if self.fixes is None:
            object.__setattr__(self, "fixes", fixes)
        if self.periods is None:
            object.__setattr__(self, "periods", periods)
        if (self.fixes, self.periods) != (fixes, periods):
            raise ScenarioError(f"{self.id} requires fixes={fixes!r} and periods={periods!r}")
        if self.fixes != "none" and self.baseline is None:
            raise ScenarioError(f"{self.id} needs a baseline plan")

    @property
    def static(self) -> bool:
        return self.periods == "static-aggregated"


@dataclass
class ScenarioRow:
    scenario: str
    model_kind: str
    model_name: str
    fingerprint: str
    status: str
    stations: int
    objective: Fraction  # multi-period objective of the (replicated) plan
    rate_by_type: dict[int, Fraction | None]
    total_rate: Fraction
    time: float
    plan: Plan
    optimized_objective: Fraction | None = None  # static scenarios: value on the aggregated model


@dataclass
class Context:
    """Coverage data shared across the scenarios of one instance."""

    instance: Instance
    sets: CoverageSets
    table: ReliabilityTable | None = None

    @classmethod
    def build(cls, instance: Instance, probabilistic: bool = True) -> "Context":
        sets = build_coverage_sets(instance)
        return cls(instance, sets, build_reliability_table(instance, sets) if probabilistic else None)

    def model(self, kind: str, static: bool) -> ModelSpec:
        if kind == PROBABILISTIC and self.table is None:
            self.table = build_reliability_table(self.instance, self.sets)
        return build_model(self.instance, kind, static=static, sets=self.sets, table=self.table)


def evaluate_plan(instance: Instance, plan: Plan, kind: str, ctx: Context | None = None) -> Plan:
    """Score a full multi-period plan: y is decoded optimally for the fixed z and x."""
    ctx = ctx or Context.build(instance, kind == PROBABILISTIC)
    if plan.num_periods == 1 and instance.num_periods != 1:
        plan = replicate_plan(plan, instance.num_periods)
    check_plan(plan, instance)
    model = fix_variables(ctx.model(kind, static=False), plan, "z-and-x")
    sol = solve_exact(model)
    if sol.status != OPTIMAL:
        raise ScenarioError(f"plan could not be evaluated (status {sol.status})")
    return decode(sol, instance, model)


def _baseline_for(spec: ScenarioSpec, instance: Instance) -> Plan | None:
    plan = spec.baseline
    if plan is None:
        return None
    if plan.num_periods == 1 and instance.num_periods != 1:
        plan = replicate_plan(plan, instance.num_periods)
    try:
        check_plan(plan, instance)
    except ValueError as exc:
        raise ScenarioError(f"baseline does not fit the instance: {exc}") from exc
    return plan


def run_scenario(
    instance: Instance,
    spec: ScenarioSpec,
    solver_config: SolverConfig | None = None,
    *,
    mandatory_sites: Iterable[int] = (),
    ctx: Context | None = None,
) -> ScenarioRow:
    config = solver_config or SolverConfig()
    ctx = ctx or Context.build(instance, spec.model_kind == PROBABILISTIC)
    start = time.perf_counter()
    baseline = _baseline_for(spec, instance)

    model = ctx.model(spec.model_kind, spec.static)
    if spec.fixes == "none":
        model = require_open(model, mandatory_sites)
        if spec.epsilon is not None:
            model = add_epsilon_constraint(model, spec.epsilon)
    else:
        model = fix_variables(model, baseline, spec.fixes)

    initial = baseline if spec.fixes == "z-only" and not spec.static else None
    sol = solve(model, config, initial)
    if sol.status == INFEASIBLE or not sol.has_incumbent:
        raise ScenarioError(f"{spec.id}: no feasible solution (status {sol.status})")
    plan = decode(sol, instance, model)
    optimized = None
    if spec.static:
        optimized = plan.objective
        plan = evaluate_plan(instance, plan, spec.model_kind, ctx)
    elapsed = time.perf_counter() - start
    return ScenarioRow(
        scenario=spec.id,
        model_kind=spec.model_kind,
        model_name=model.name,
        fingerprint=instance.fingerprint,
        status=sol.status,
        stations=plan.stations,
        objective=plan.objective,
        rate_by_type=dict(plan.rate_by_type),
        total_rate=plan.total_rate,
        time=elapsed,
        plan=plan,
        optimized_objective=optimized,
    )


def run_scenarios(
    instance: Instance,
    ids: Sequence[str],
    kinds: Sequence[str],
    baseline: Plan | None,
    solver_config: SolverConfig | None = None,
    *,
    epsilon: int | None = None,
    mandatory_sites: Iterable[int] = (),
) -> list[ScenarioRow]:
    ctx = Context.build(instance, PROBABILISTIC in kinds)
    rows = []
    for kind in kinds:
        for sid in ids:
            spec = ScenarioSpec(sid, kind, baseline=baseline, epsilon=epsilon if sid in ("S4", "S5") else None)
            rows.append(run_scenario(instance, spec, solver_config, mandatory_sites=mandatory_sites, ctx=ctx))
    return rows


# -- comparison ------------------------------------------------------------

PAIRS = (("S2", "S1"), ("S3", "S2"), ("S5", "S4"), ("S4", "S2"))


@dataclass
class Delta:
    label: str
    model_kind: str
    objective_abs: Fraction
    objective_pct: Fraction | None
    rate_abs: Fraction  # percentage points of total demand


def _delta(label: str, kind: str, new: ScenarioRow, old: ScenarioRow) -> Delta:
    diff = new.objective - old.objective
    pct = diff / old.objective * 100 if old.objective else (Fraction(0) if diff == 0 else None)
    return Delta(label, kind, diff, pct, (new.total_rate - old.total_rate) * 100)


def compare(rows: Sequence[ScenarioRow]) -> list[Delta]:
    """Absolute and relative changes between the standard scenario pairs.

    Deterministic-versus-probabilistic deltas are reported per scenario when both
    kinds are present.  All rows must come from the same instance.
    """
    prints = {r.fingerprint for r in rows}
    if len(prints) > 1:
        raise ScenarioError(f"reports come from different instances: {sorted(prints)}")
    by = {(r.model_kind, r.scenario): r for r in rows}
    out = []
    for kind in (DETERMINISTIC, PROBABILISTIC):
        for new, old in PAIRS:
            if (kind, new) in by and (kind, old) in by:
                out.append(_delta(f"{new} vs {old}", kind, by[kind, new], by[kind, old]))
    for sid in SCENARIOS:
        if (DETERMINISTIC, sid) in by and (PROBABILISTIC, sid) in by:
            out.append(_delta(f"{sid} det vs prob", "both", by[DETERMINISTIC, sid], by[PROBABILISTIC, sid]))
    return out


# -- tables ----------------------------------------------------------------


def table_header(instance: Instance) -> list[str]:
    return (
        ["model", "scenario", "stations", "time_s", "objective"]
        + [f"{t.label}_rate_pct" for t in instance.ambulance_types]
        + ["total_rate_pct"]
    )


def _pct(r: Fraction | None) -> str:
    return "" if r is None else f"{float(r * 100):.2f}"


def table_rows(rows: Sequence[ScenarioRow], instance: Instance, with_time: bool = True) -> list[list[str]]:
    out = []
    for r in rows:
        out.append(
            [r.model_name, r.scenario, str(r.stations), f"{r.time:.2f}" if with_time else "", f"{float(r.objective):.4f}"]
            + [_pct(r.rate_by_type.get(u)) for u in range(instance.n_types)]
            + [_pct(r.total_rate)]
        )
    return out


def to_csv(rows: Sequence[ScenarioRow], instance: Instance, with_time: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table_header(instance))
    writer.writerows(table_rows(rows, instance, with_time))
    return buf.getvalue()


def to_markdown(rows: Sequence[ScenarioRow], instance: Instance, with_time: bool = True) -> str:
    header = table_header(instance)
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    for cells in table_rows(rows, instance, with_time):
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def deltas_markdown(deltas: Sequence[Delta]) -> str:
    lines = ["| comparison | model | objective change | objective change % | total rate change (pp) |", "|---|---|---|---|---|"]
    for d in deltas:
        pct = "" if d.objective_pct is None else f"{float(d.objective_pct):.2f}"
        lines.append(f"| {d.label} | {d.model_kind} | {float(d.objective_abs):.4f} | {pct} | {float(d.rate_abs):.2f} |")
    return "\n".join(lines) + "\n"
