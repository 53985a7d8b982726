"""Epsilon-constraint sweeps over the station count and Pareto-front extraction.

For every integer cap ``eps`` in ``[eps_min, eps_max]`` the coverage model is solved
with ``sum_j z_j <= eps``.  Each solve yields a point (stations actually opened,
coverage objective).  The front keeps the non-dominated points: fewer stations and
more coverage are both preferred.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .coverage import build_coverage_sets, build_reliability_table
from .formulation import PROBABILISTIC, ModelSpec, add_epsilon_constraint, build_model, require_open
from .instance import Instance
from .plan import Plan
from .solver import INFEASIBLE, SolverConfig, decode, solve

ERROR = "error"


@dataclass
class ParetoPoint:
    epsilon: int
    stations_used: int
    coverage_objective: Fraction | None
    plan: Plan | None
    status: str
    time: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.plan is not None and self.coverage_objective is not None


@dataclass
class ParetoFront:
    points: list[ParetoPoint]  # filtered, ordered by stations_used
    model_name: str
    fingerprint: str
    raw: list[ParetoPoint] = field(default_factory=list)  # one entry per epsilon, in sweep order

    @property
    def failed(self) -> list[ParetoPoint]:
        return [p for p in self.raw if not p.ok]

    def monotonicity_violations(self) -> list[tuple[int, int]]:
        """Consecutive raw epsilons whose objective decreased."""
        good = [p for p in self.raw if p.ok]
        return [
            (a.epsilon, b.epsilon)
            for a, b in zip(good, good[1:])
            if b.coverage_objective < a.coverage_objective
        ]


def compute_eps_min(instance: Instance) -> int:
    """Fewest stations able to host the whole fleet at once.

    The smallest ``m`` such that the ``m`` largest capacities add up to at least the
    total fleet; under uniform capacity this is ``ceil(sum P_u / C)``.  Returns the
    number of sites if even all of them cannot host the fleet.
    """
    need = instance.total_fleet
    held = 0
    for m, cap in enumerate(sorted((s.capacity for s in instance.sites), reverse=True), start=1):
        if held >= need:
            return m - 1
        held += cap
    return instance.n_sites


def _pair(p) -> tuple:
    if isinstance(p, tuple):
        return p
    return (p.stations_used, p.coverage_objective)


def filter_nondominated(points: Iterable, key: Callable | None = None) -> list:
    """Drop every point dominated by another.

    ``q`` dominates ``p`` when ``q`` uses no more stations and covers at least as
    much, with one of the two strict.  Exact duplicates dominate neither each other,
    so both survive.  Points are ``(stations, coverage)`` tuples or objects with
    ``stations_used``/``coverage_objective`` (or any ``key`` mapping to such a pair).
    Output is sorted by (stations, -coverage), stable on input order.
    """
    key = key or _pair
    items = sorted(enumerate(points), key=lambda ip: (key(ip[1])[0], -key(ip[1])[1], ip[0]))
    kept = []
    best_prev = None  # best coverage among strictly fewer stations
    group: list = []
    group_s = None

    def flush():
        nonlocal best_prev
        if not group:
            return
        top = key(group[0])[1]
        for p in group:
            cov = key(p)[1]
            if cov == top and (best_prev is None or cov > best_prev):
                kept.append(p)
        best_prev = top if best_prev is None else max(best_prev, top)

    for _, p in items:
        s = key(p)[0]
        if s != group_s:
            flush()
            group, group_s = [], s
        group.append(p)
    flush()
    return kept


def dedupe(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Keep the smallest-epsilon representative of equal (stations, coverage) pairs."""
    seen: dict[tuple, ParetoPoint] = {}
    for p in points:
        k = (p.stations_used, p.coverage_objective)
        if k not in seen or p.epsilon < seen[k].epsilon:
            seen[k] = p
    return sorted(seen.values(), key=lambda p: p.stations_used)


def knee_point(front: ParetoFront, threshold: Fraction | float) -> ParetoPoint | None:
    """First front point after which every step gains less than ``threshold`` per station."""
    pts = front.points
    if not pts:
        return None
    gains = []
    for a, b in zip(pts, pts[1:]):
        gains.append(Fraction(b.coverage_objective - a.coverage_objective) / (b.stations_used - a.stations_used))
    thr = Fraction(threshold)
    idx = len(pts) - 1
    while idx > 0 and gains[idx - 1] < thr:
        idx -= 1
    return pts[idx]


def _solve_point(base: ModelSpec, eps: int, instance: Instance, config: SolverConfig, initial: Plan | None) -> ParetoPoint:
    start = time.perf_counter()
    try:
        model = add_epsilon_constraint(base, eps)
        sol = solve(model, config, initial)
        if sol.status == INFEASIBLE or not sol.has_incumbent:
            return ParetoPoint(eps, 0, None, None, sol.status, time.perf_counter() - start)
        plan = decode(sol, instance, model)
        return ParetoPoint(eps, plan.stations, sol.objective, plan, sol.status, time.perf_counter() - start)
    except Exception as exc:  # noqa: BLE001 - a failed epsilon must not abort the sweep
        return ParetoPoint(eps, 0, None, None, ERROR, time.perf_counter() - start, f"{type(exc).__name__}: {exc}")


def _worker(args):
    return _solve_point(*args, None)


def sweep(
    instance: Instance,
    model_kind: str,
    eps_min: int,
    eps_max: int,
    solver_config: SolverConfig | None = None,
    *,
    mandatory_sites: Iterable[int] = (),
    static: bool = False,
    epsilons: Iterable[int] | None = None,
) -> ParetoFront:
    """Solve once per integer epsilon in ``[eps_min, eps_max]`` and filter the front.

    Heuristic sweeps with ``warm_start`` run sequentially, seeding each solve with
    the previous plan.  Otherwise ``jobs > 1`` distributes epsilons over processes.
    A solver failure marks that point (status ``"error"``) and the sweep goes on.
    ``epsilons`` replaces the full range by an explicit subset of it.
    """
    if eps_min > eps_max:
        raise ValueError(f"eps_min {eps_min} exceeds eps_max {eps_max}")
    if eps_min < 0:
        raise ValueError("eps_min must be non-negative")
    config = solver_config or SolverConfig()
    sets = build_coverage_sets(instance)
    table = build_reliability_table(instance, sets) if model_kind == PROBABILISTIC else None
    base = build_model(instance, model_kind, static=static, sets=sets, table=table)
    base = require_open(base, mandatory_sites)
    if epsilons is None:
        epsilons = list(range(eps_min, eps_max + 1))
    else:
        epsilons = sorted(set(epsilons))
        if any(e < eps_min or e > eps_max for e in epsilons):
            raise ValueError("explicit epsilons must lie in [eps_min, eps_max]")

    sequential = config.jobs == 1 or (config.warm_start and config.method == "heuristic")
    raw: list[ParetoPoint] = []
    if sequential:
        prev = None
        for eps in epsilons:
            hint = prev if (config.warm_start and config.method == "heuristic") else None
            point = _solve_point(base, eps, instance, config, hint)
            raw.append(point)
            if point.ok:
                prev = point.plan
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            raw = list(pool.map(_worker, [(base, eps, instance, config) for eps in epsilons]))

    good = [p for p in raw if p.ok]
    front = dedupe(filter_nondominated(good))
    return ParetoFront(front, base.name, instance.fingerprint, raw)


# -- output ----------------------------------------------------------------


def _num(value: Fraction | None, places: int = 6) -> str:
    if value is None:
        return ""
    return f"{float(value):.{places}f}"


def front_header(instance: Instance) -> list[str]:
    return (
        ["epsilon", "stations_used", "objective", "coverage_rate_total"]
        + [f"coverage_rate_{t.label}" for t in instance.ambulance_types]
        + ["status"]
    )


def front_rows(points: Sequence[ParetoPoint], instance: Instance) -> list[list[str]]:
    """Rates are percentages of total demand."""
    rows = []
    for p in points:
        plan = p.plan
        total = _num(plan.total_rate * 100, 4) if plan is not None and plan.total_rate is not None else ""
        per_type = []
        for u in range(instance.n_types):
            r = plan.rate_by_type.get(u) if plan is not None else None
            per_type.append(_num(r * 100, 4) if r is not None else "")
        rows.append([str(p.epsilon), str(p.stations_used), _num(p.coverage_objective), total, *per_type, p.status])
    return rows


def write_front_csv(points: Sequence[ParetoPoint], instance: Instance, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(front_header(instance))
        writer.writerows(front_rows(points, instance))


def default_knee_threshold(instance: Instance, share: float = 0.005) -> Fraction:
    """``share`` of total demand per added station, the knee cut-off used by the CLI."""
    if not math.isfinite(share) or share < 0:
        raise ValueError("knee share must be a non-negative number")
    return instance.total_demand() * Fraction(share).limit_denominator(10**9)
