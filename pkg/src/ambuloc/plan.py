"""Plans: opened stations plus per-period ambulance allocations, and their JSON form.

Plan JSON::

    {"opened_sites": [0, 4],
     "allocations": [{"site": 0, "type": 1, "period": 3, "count": 1}, ...],
     "objective": 12.5}

``type`` may be an integer index or a type label.  Allocation counts are 0/1 because
``x[j][u][t]`` is binary: a site holds at most one vehicle of each type per period.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from ._numbers import encode_json_number, to_fraction
from .instance import Instance

AllocKey = tuple[int, int, int]  # (site, type, period)


class PlanError(ValueError):
    """A plan violates an instance constraint; ``constraint`` names the family."""

    def __init__(self, constraint: str, message: str):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


@dataclass(frozen=True, eq=False)
class Plan:
    opened: frozenset[int]
    alloc: Mapping[AllocKey, int]
    num_periods: int
    objective: Fraction | None = None
    covered_by_type: Mapping[int, Fraction] = field(default_factory=dict)
    rate_by_type: Mapping[int, Fraction | None] = field(default_factory=dict)
    period_rates: Mapping[tuple[int, int], Fraction | None] = field(default_factory=dict)
    total_rate: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "opened", frozenset(self.opened))
        object.__setattr__(self, "alloc", {k: int(v) for k, v in sorted(self.alloc.items()) if v})

    def __eq__(self, other):
        if not isinstance(other, Plan):
            return NotImplemented
        return (self.opened, dict(self.alloc), self.num_periods) == (other.opened, dict(other.alloc), other.num_periods)

    __hash__ = None

    @property
    def stations(self) -> int:
        return len(self.opened)

    def vehicles(self, u: int, t: int) -> int:
        return sum(c for (_, v, s), c in self.alloc.items() if v == u and s == t)

    def without_report(self) -> "Plan":
        return Plan(self.opened, self.alloc, self.num_periods)


def empty_plan(num_periods: int) -> Plan:
    return Plan(frozenset(), {}, num_periods)


def replicate_plan(plan: Plan, num_periods: int) -> Plan:
    """Copy a single-period plan's allocation to every period."""
    if plan.num_periods != 1:
        raise ValueError("only single-period plans can be replicated")
    alloc = {(j, u, t): c for (j, u, _), c in plan.alloc.items() for t in range(num_periods)}
    return Plan(plan.opened, alloc, num_periods)


def check_plan(plan: Plan, instance: Instance) -> None:
    """Raise PlanError if the plan is not feasible for the instance.

    Families are checked in the order index, capacity, fleet-limit, site-link, binary.
    """
    n_j, n_u, n_t = instance.n_sites, instance.n_types, plan.num_periods
    if n_t not in (1, instance.num_periods):
        raise PlanError("index", f"plan has {n_t} periods, instance has {instance.num_periods}")
    for j in plan.opened:
        if not 0 <= j < n_j:
            raise PlanError("index", f"opened site {j} out of range")
    for (j, u, t), c in plan.alloc.items():
        if not (0 <= j < n_j and 0 <= u < n_u and 0 <= t < n_t):
            raise PlanError("index", f"allocation (site={j}, type={u}, period={t}) out of range")
        if c < 0:
            raise PlanError("index", f"negative count at (site={j}, type={u}, period={t})")
    per_site: dict[tuple[int, int], int] = {}
    per_type: dict[tuple[int, int], int] = {}
    for (j, u, t), c in plan.alloc.items():
        per_site[j, t] = per_site.get((j, t), 0) + c
        per_type[u, t] = per_type.get((u, t), 0) + c
    for (j, t), total in sorted(per_site.items()):
        cap = instance.sites[j].capacity
        if total > cap:
            raise PlanError("capacity", f"site {j} holds {total} vehicles in period {t}, capacity is {cap}")
    for (u, t), total in sorted(per_type.items()):
        fleet = instance.ambulance_types[u].fleet_size
        if total > fleet:
            label = instance.ambulance_types[u].label
            raise PlanError("fleet-limit", f"{total} {label} vehicles used in period {t}, fleet is {fleet}")
    for (j, u, t), c in plan.alloc.items():
        if j not in plan.opened:
            raise PlanError("site-link", f"vehicle allocated to site {j} which is not opened")
        if c > 1:
            raise PlanError("binary", f"{c} vehicles of one type at site {j} in period {t}; at most 1 allowed")


# -- JSON ------------------------------------------------------------------


def plan_to_dict(plan: Plan, instance: Instance | None = None) -> dict:
    doc: dict = {
        "opened_sites": sorted(plan.opened),
        "allocations": [
            {"site": j, "type": u, "period": t, "count": c} for (j, u, t), c in sorted(plan.alloc.items())
        ],
    }
    if plan.num_periods != 1 or instance is None:
        doc["num_periods"] = plan.num_periods
    if plan.objective is not None:
        doc["objective"] = encode_json_number(plan.objective)
    if plan.total_rate is not None:
        labels = (lambda u: instance.ambulance_types[u].label) if instance else str
        doc["coverage"] = {
            "total_rate": encode_json_number(plan.total_rate),
            "rate_by_type": {
                labels(u): (None if r is None else encode_json_number(r)) for u, r in sorted(plan.rate_by_type.items())
            },
            "covered_by_type": {labels(u): encode_json_number(c) for u, c in sorted(plan.covered_by_type.items())},
        }
    return doc


def dumps_plan(plan: Plan, instance: Instance | None = None) -> str:
    return json.dumps(plan_to_dict(plan, instance), indent=1, sort_keys=True) + "\n"


def save_plan(plan: Plan, path: str | Path, instance: Instance | None = None) -> None:
    Path(path).write_text(dumps_plan(plan, instance), encoding="utf-8")


def plan_from_dict(doc: dict, instance: Instance | None = None) -> Plan:
    if not isinstance(doc, dict):
        raise PlanError("format", "plan document must be a JSON object")
    opened = doc.get("opened_sites", [])
    allocations = doc.get("allocations", [])
    if not isinstance(opened, list) or not isinstance(allocations, list):
        raise PlanError("format", "opened_sites and allocations must be arrays")
    alloc: dict[AllocKey, int] = {}
    max_t = -1
    for n, entry in enumerate(allocations):
        try:
            j, u, t, c = entry["site"], entry["type"], entry["period"], entry.get("count", 1)
        except (KeyError, TypeError) as exc:
            raise PlanError("format", f"allocations[{n}] needs site, type, period") from exc
        if isinstance(u, str):
            if instance is None:
                raise PlanError("format", f"allocations[{n}] uses a type label but no instance was given")
            try:
                u = instance.type_index(u)
            except KeyError as exc:
                raise PlanError("index", str(exc)) from exc
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (j, u, t, c)):
            raise PlanError("format", f"allocations[{n}] fields must be integers")
        alloc[j, u, t] = alloc.get((j, u, t), 0) + c
        max_t = max(max_t, t)
    if "num_periods" in doc:
        num_periods = doc["num_periods"]
    elif instance is not None:
        num_periods = instance.num_periods
    else:
        num_periods = max_t + 1 if max_t >= 0 else 1
    objective = to_fraction(doc["objective"], "objective") if doc.get("objective") is not None else None
    return Plan(frozenset(opened), alloc, num_periods, objective=objective)


def load_plan(path: str | Path, instance: Instance | None = None) -> Plan:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"), parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise PlanError("format", f"{exc.msg} (line {exc.lineno}, column {exc.colno})") from exc
    return plan_from_dict(doc, instance)


def baseline_plan_load(path: str | Path, instance: Instance) -> Plan:
    """Load a fixed configuration (e.g. the current station layout) and check it."""
    plan = load_plan(path, instance)
    check_plan(plan, instance)
    return plan


def plan_from_allocations(opened: Iterable[int], alloc: Iterable[AllocKey], num_periods: int) -> Plan:
    return Plan(frozenset(opened), {k: 1 for k in alloc}, num_periods)
