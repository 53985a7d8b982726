"""0-1 linear models as plain data.

Four builders share one skeleton:

=====================  =========================  ===================================
builder                periods                    objective on
=====================  =========================  ===================================
build_fleet_ict        every period               ``d[i,u,t] * y_det(i,u,t)``
build_lr_mexclp_ict    every period               ``d[i,u,t] * q[i,u,k,t] * y_prob(i,u,k,t)``
build_fleet_static     one aggregated period      ``sum_t d[i,u,t] * y_det(i,u,0)``
build_lr_mexclp_static one aggregated period      ``sum_t d[i,u,t] q[i,u,k,t] * y_prob(i,u,k,0)``
=====================  =========================  ===================================

``y_det`` says whether a point is covered by at least one vehicle of its type;
``y_prob`` additionally records how many (``k``) vehicles cover it, so the
objective can weight the demand by the reliability of ``k`` servers.

Constraint tags
---------------
coverage-link  ``sum_{j in N_i^u} x[j,u,t] - y_det[i,u,t] >= 0``
server-count   ``sum_{j in N_i^u} x[j,u,t] - sum_k k y_prob[i,u,k,t] >= 0``
one-k          ``sum_k y_prob[i,u,k,t] <= 1``
fleet-limit    ``sum_j x[j,u,t] <= P_u``
capacity       ``sum_u x[j,u,t] - C_j z[j] <= 0``
site-link      ``x[j,u,t] - z[j] <= 0``
epsilon        ``sum_j z[j] <= eps``
fixed          ``v = value`` (variables turned into parameters)
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, NamedTuple

from .coverage import CoverageSets, ReliabilityTable
from .instance import Instance
from .plan import Plan

FAMILIES = ("z", "x", "y_det", "y_prob")
RELATIONS = ("<=", ">=", "=")
DETERMINISTIC = "deterministic"
PROBABILISTIC = "probabilistic"


class VarId(NamedTuple):
    family: str
    index: tuple[int, ...]

    @property
    def name(self) -> str:
        prefix = "y" if self.family.startswith("y") else self.family
        return "_".join([prefix, *map(str, self.index)])

    @classmethod
    def parse(cls, name: str) -> "VarId":
        prefix, *rest = name.split("_")
        index = tuple(int(v) for v in rest)
        arity = {"z": 1, "x": 3}
        if prefix in arity and len(index) == arity[prefix]:
            return cls(prefix, index)
        if prefix == "y" and len(index) in (3, 4):
            return cls("y_det" if len(index) == 3 else "y_prob", index)
        raise ValueError(f"not a model variable name: {name!r}")


def z_var(j: int) -> VarId:
    return VarId("z", (j,))


def x_var(j: int, u: int, t: int) -> VarId:
    return VarId("x", (j, u, t))


def ydet_var(i: int, u: int, t: int) -> VarId:
    return VarId("y_det", (i, u, t))


def yprob_var(i: int, u: int, k: int, t: int) -> VarId:
    return VarId("y_prob", (i, u, k, t))


@dataclass(frozen=True, slots=True)
class LinearConstraint:
    terms: tuple[tuple[VarId, Fraction | int], ...]
    relation: str
    rhs: Fraction | int
    tag: str

    def activity(self, values) -> Fraction | int:
        return sum(c * values.get(v, 0) for v, c in self.terms)

    def satisfied(self, values) -> bool:
        lhs = self.activity(values)
        if self.relation == "<=":
            return lhs <= self.rhs
        if self.relation == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    variables: tuple[VarId, ...]
    objective: tuple[tuple[VarId, Fraction | int], ...]
    constraints: tuple[LinearConstraint, ...]
    sense: str = "maximize"
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def name(self) -> str:
        return self.metadata.get("name", "model")

    @property
    def kind(self) -> str:
        return self.metadata.get("kind", DETERMINISTIC)

    @property
    def epsilon(self) -> int | None:
        return self.metadata.get("epsilon")

    def count_by_tag(self) -> Counter:
        return Counter(c.tag for c in self.constraints)

    def count_by_family(self) -> Counter:
        return Counter(v.family for v in self.variables)

    def objective_value(self, values) -> Fraction:
        return Fraction(sum(c * values.get(v, 0) for v, c in self.objective))

    def validate(self) -> None:
        """Check the structural invariants (declared variables, no duplicate terms)."""
        declared = set(self.variables)
        if len(declared) != len(self.variables):
            raise ModelError("duplicate variable declaration")
        for v in self.variables:
            if v.family not in FAMILIES:
                raise ModelError(f"unknown variable family {v.family!r}")
        if self.sense != "maximize":
            raise ModelError(f"unsupported sense {self.sense!r}")
        seen = set()
        for v, _ in self.objective:
            if v not in declared:
                raise ModelError(f"objective uses undeclared variable {v.name}")
            if v in seen:
                raise ModelError(f"objective repeats variable {v.name}")
            seen.add(v)
        for n, con in enumerate(self.constraints):
            if con.relation not in RELATIONS:
                raise ModelError(f"constraint {n} has relation {con.relation!r}")
            names = [v for v, _ in con.terms]
            if len(set(names)) != len(names):
                raise ModelError(f"constraint {n} ({con.tag}) repeats a variable")
            for v in names:
                if v not in declared:
                    raise ModelError(f"constraint {n} ({con.tag}) uses undeclared variable {v.name}")


# -- builders --------------------------------------------------------------


def _build(instance: Instance, sets: CoverageSets, *, periods: int, ycoef, probabilistic: bool, name: str, static: bool) -> ModelSpec:
    n_i, n_j, n_u = instance.n_points, instance.n_sites, instance.n_types
    K = instance.k_max if probabilistic else 1
    zs = [z_var(j) for j in range(n_j)]
    xs = {(j, u, t): x_var(j, u, t) for j in range(n_j) for u in range(n_u) for t in range(periods)}
    variables: list[VarId] = list(zs) + list(xs.values())
    objective = []
    constraints: list[LinearConstraint] = []

    for i in range(n_i):
        for u in range(n_u):
            cover = sets.site_covers[i][u]
            for t in range(periods):
                x_terms = tuple((xs[j, u, t], 1) for j in cover)
                if probabilistic:
                    ys = [yprob_var(i, u, k, t) for k in range(1, K + 1)]
                    variables.extend(ys)
                    objective.extend((y, ycoef(i, u, k, t)) for k, y in enumerate(ys, start=1))
                    constraints.append(
                        LinearConstraint(x_terms + tuple((y, -k) for k, y in enumerate(ys, start=1)), ">=", 0, "server-count")
                    )
                    constraints.append(LinearConstraint(tuple((y, 1) for y in ys), "<=", 1, "one-k"))
                else:
                    y = ydet_var(i, u, t)
                    variables.append(y)
                    objective.append((y, ycoef(i, u, 1, t)))
                    constraints.append(LinearConstraint(x_terms + ((y, -1),), ">=", 0, "coverage-link"))

    for u, amb in enumerate(instance.ambulance_types):
        for t in range(periods):
            terms = tuple((xs[j, u, t], 1) for j in range(n_j))
            constraints.append(LinearConstraint(terms, "<=", amb.fleet_size, "fleet-limit"))
    for j, site in enumerate(instance.sites):
        for t in range(periods):
            terms = tuple((xs[j, u, t], 1) for u in range(n_u)) + ((zs[j], -site.capacity),)
            constraints.append(LinearConstraint(terms, "<=", 0, "capacity"))
    for j in range(n_j):
        for u in range(n_u):
            for t in range(periods):
                constraints.append(LinearConstraint(((xs[j, u, t], 1), (zs[j], -1)), "<=", 0, "site-link"))

    metadata = {
        "name": name,
        "kind": PROBABILISTIC if probabilistic else DETERMINISTIC,
        "static": static,
        "num_periods": periods,
        "instance_periods": instance.num_periods,
        "instance": instance.fingerprint,
        "n_points": n_i,
        "n_sites": n_j,
        "n_types": n_u,
        "k_max": K,
        "epsilon": None,
    }
    return ModelSpec(tuple(variables), tuple(objective), tuple(constraints), "maximize", metadata)


def build_fleet_ict(instance: Instance, sets: CoverageSets) -> ModelSpec:
    """Multi-period deterministic coverage model (one ``y`` per point, type and period)."""
    demand = instance.demand
    return _build(
        instance, sets, periods=instance.num_periods, probabilistic=False, name="FLEET-ICt", static=False,
        ycoef=lambda i, u, k, t: demand(i, u, t),
    )


def build_lr_mexclp_ict(instance: Instance, sets: CoverageSets, table: ReliabilityTable) -> ModelSpec:
    """Multi-period expected-coverage model with local reliabilities ``q``."""
    if table.k_max != instance.k_max or len(table.reliability) != instance.n_points:
        raise ModelError("reliability table does not match the instance")
    demand = instance.demand
    return _build(
        instance, sets, periods=instance.num_periods, probabilistic=True, name="LR-MEXCLP-ICt", static=False,
        ycoef=lambda i, u, k, t: demand(i, u, t) * table.q(i, u, k, t),
    )


def build_fleet_static(instance: Instance, sets: CoverageSets) -> ModelSpec:
    """Single-period deterministic model over demand summed across periods."""
    totals = [[sum(p.demand[u], Fraction(0)) for u in range(instance.n_types)] for p in instance.demand_points]
    return _build(
        instance, sets, periods=1, probabilistic=False, name="FLEET", static=True,
        ycoef=lambda i, u, k, t: totals[i][u],
    )


def build_lr_mexclp_static(instance: Instance, sets: CoverageSets, table: ReliabilityTable) -> ModelSpec:
    """Single-period probabilistic model.

    The coefficient of ``y_prob(i,u,k,0)`` is ``sum_t d[i][u][t] * max_{k' <= k} q[i][u][k'][t]``:
    with ``k`` vehicles covering a point all period long, each period serves it at
    the best reliability reachable with at most ``k`` servers.  A plan therefore
    scores exactly what its replication scores in the multi-period model.
    """
    if table.k_max != instance.k_max or len(table.reliability) != instance.n_points:
        raise ModelError("reliability table does not match the instance")
    T = instance.num_periods
    pts = instance.demand_points
    coef = {
        (i, u, k): sum(
            (pts[i].demand[u][t] * max(table.q(i, u, kk, t) for kk in range(1, k + 1)) for t in range(T)),
            Fraction(0),
        )
        for i in range(instance.n_points)
        for u in range(instance.n_types)
        for k in range(1, instance.k_max + 1)
    }
    return _build(
        instance, sets, periods=1, probabilistic=True, name="LR-MEXCLP", static=True,
        ycoef=lambda i, u, k, t: coef[i, u, k],
    )


def build_model(instance: Instance, kind: str, *, static: bool = False, sets: CoverageSets | None = None, table: ReliabilityTable | None = None) -> ModelSpec:
    """Dispatch to one of the four builders, computing coverage data on demand."""
    from .coverage import build_coverage_sets, build_reliability_table

    sets = sets or build_coverage_sets(instance)
    if kind == DETERMINISTIC:
        return build_fleet_static(instance, sets) if static else build_fleet_ict(instance, sets)
    if kind == PROBABILISTIC:
        table = table or build_reliability_table(instance, sets)
        return build_lr_mexclp_static(instance, sets, table) if static else build_lr_mexclp_ict(instance, sets, table)
    raise ValueError(f"model kind must be {DETERMINISTIC!r} or {PROBABILISTIC!r}, got {kind!r}")


def expected_size(n_i: int, n_j: int, n_u: int, n_t: int, k_max: int, probabilistic: bool) -> tuple[int, int]:
    """Closed-form (variables, constraints) counts for a builder's output."""
    n_y = n_i * n_u * n_t * (k_max if probabilistic else 1)
    n_vars = n_j + n_j * n_u * n_t + n_y
    per_point = 2 if probabilistic else 1
    n_cons = per_point * n_i * n_u * n_t + n_u * n_t + n_j * n_t + n_j * n_u * n_t
    return n_vars, n_cons


# -- model transformations ------------------------------------------------


def _z_vars(model: ModelSpec) -> list[VarId]:
    return [v for v in model.variables if v.family == "z"]


def add_epsilon_constraint(model: ModelSpec, epsilon: int) -> ModelSpec:
    """Cap the number of opened stations at ``epsilon`` (replacing any earlier cap)."""
    if isinstance(epsilon, bool) or not isinstance(epsilon, int) or epsilon < 0:
        raise ValueError(f"epsilon must be a non-negative integer, got {epsilon!r}")
    kept = tuple(c for c in model.constraints if c.tag != "epsilon")
    cap = LinearConstraint(tuple((z, 1) for z in _z_vars(model)), "<=", epsilon, "epsilon")
    return replace(model, constraints=kept + (cap,), metadata={**model.metadata, "epsilon": epsilon})


def _with_fixed(model: ModelSpec, values: dict[VarId, int], note: str) -> ModelSpec:
    kept = tuple(c for c in model.constraints if not (c.tag == "fixed" and c.terms[0][0] in values))
    fixed = tuple(LinearConstraint(((v, 1),), "=", val, "fixed") for v, val in values.items())
    fixes = list(model.metadata.get("fixes", ())) + [note]
    return replace(model, constraints=kept + fixed, metadata={**model.metadata, "fixes": fixes})


def fix_variables(model: ModelSpec, plan: Plan, which: str) -> ModelSpec:
    """Turn ``z`` (and optionally ``x``) into parameters taken from ``plan``.

    ``which`` is ``"z-only"`` or ``"z-and-x"``.  Every ``z`` of the model is fixed to
    whether its site is opened in the plan; with ``"z-and-x"`` every ``x`` is fixed
    to the plan's allocation count as well.
    """
    if which not in ("z-only", "z-and-x"):
        raise ValueError(f"which must be 'z-only' or 'z-and-x', got {which!r}")
    declared = set(model.variables)
    zs = _z_vars(model)
    for j in plan.opened:
        if z_var(j) not in declared:
            raise ModelError(f"plan opens site {j}, which the model does not have")
    values: dict[VarId, int] = {z: int(z.index[0] in plan.opened) for z in zs}
    if which == "z-and-x":
        if plan.num_periods != model.metadata.get("num_periods", plan.num_periods):
            raise ModelError(
                f"plan has {plan.num_periods} periods, model has {model.metadata.get('num_periods')}"
            )
        for key, count in plan.alloc.items():
            if x_var(*key) not in declared:
                raise ModelError(f"plan allocates x{key}, which the model does not have")
            if count > 1:
                raise ModelError(f"plan allocates {count} vehicles to binary x{key}")
        for v in model.variables:
            if v.family == "x":
                values[v] = plan.alloc.get(v.index, 0)
    return _with_fixed(model, values, which)


def require_open(model: ModelSpec, sites: Iterable[int]) -> ModelSpec:
    """Force the given stations open (e.g. a central base that always operates)."""
    declared = set(model.variables)
    values = {}
    for j in sites:
        if z_var(j) not in declared:
            raise ModelError(f"mandatory site {j} is not a model site")
        values[z_var(j)] = 1
    if not values:
        return model
    return _with_fixed(model, values, "mandatory")
