"""Translate a tagged ModelSpec into index arrays the search routines work on.

Objective coefficients are rescaled to integers by the lcm of their denominators so
the searches run on Python ints while staying exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..formulation import LinearConstraint, ModelError, ModelSpec, VarId


@dataclass
class Group:
    """One (point, type, period) demand term and its decoded ``y`` choice.

    ``best[n]`` is the best scaled objective reachable when ``n`` covering vehicles
    are present and ``choice[n]`` the ``k`` achieving it (0 = leave ``y`` at zero).
    """

    key: tuple[int, int, int]
    cover: list[int]
    yvars: list[VarId]  # position k-1 holds the variable for k servers
    coefs: list[int]
    best: list[int] = field(default_factory=list)
    choice: list[int] = field(default_factory=list)

    def finish(self) -> None:
        K = len(self.coefs)
        self.best = [0] * (K + 1)
        self.choice = [0] * (K + 1)
        top, arg = None, 0
        for n in range(1, K + 1):
            c = self.coefs[n - 1]
            if top is None or c > top:
                top, arg = c, n
            if top >= 0:
                self.best[n], self.choice[n] = top, arg

    def value(self, n: int) -> int:
        return self.best[n if n < len(self.best) else len(self.best) - 1]

    def k_for(self, n: int) -> int:
        return self.choice[n if n < len(self.choice) else len(self.choice) - 1]


class Compiled:
    """Structured view of a location model.

    Attributes are plain lists indexed by site position ``s`` (order of ``z``
    variables) and ``x`` position; see ``compile_model``.
    """

    def __init__(self, model: ModelSpec):
        self.model = model
        self.scale = 1
        self.site_ids: list[int] = []
        self.site_pos: dict[int, int] = {}
        self.z_vars: list[VarId] = []
        self.x_vars: list[VarId] = []
        self.x_pos: dict[tuple[int, int, int], int] = {}
        self.x_site: list[int] = []  # site position
        self.x_type: list[int] = []
        self.x_period: list[int] = []
        self.groups: list[Group] = []
        self.x_groups: list[list[int]] = []
        self.fleet: dict[tuple[int, int], int] = {}
        self.capacity: dict[tuple[int, int], int] = {}  # (site position, period)
        self.epsilon: int | None = None
        self.fixed_z: dict[int, int] = {}
        self.fixed_x: dict[int, int] = {}
        self.infeasible: str | None = None
        self.periods: list[int] = []
        self.types: list[int] = []

    # convenience used by both searches
    def fleet_of(self, u: int, t: int) -> int:
        return self.fleet.get((u, t), len(self.site_ids))

    def cap_of(self, s: int, t: int) -> int:
        return self.capacity.get((s, t), len(self.types))

    def to_fraction(self, scaled: int) -> Fraction:
        return Fraction(scaled, self.scale)

    def y_assignment(self, counts: list[int]) -> dict[VarId, int]:
        values: dict[VarId, int] = {}
        for g, n in zip(self.groups, counts):
            k = g.k_for(n)
            for pos, y in enumerate(g.yvars, start=1):
                values[y] = int(pos == k)
        return values

    def assignment(self, z_open, x_on) -> tuple[dict[VarId, int], int]:
        """Full 0/1 assignment with optimally decoded ``y`` and its scaled objective."""
        counts = [0] * len(self.groups)
        values: dict[VarId, int] = {}
        for s, z in enumerate(self.z_vars):
            values[z] = int(bool(z_open[s]))
        for p, x in enumerate(self.x_vars):
            on = int(bool(x_on[p]))
            values[x] = on
            if on:
                for g in self.x_groups[p]:
                    counts[g] += 1
        values.update(self.y_assignment(counts))
        total = sum(g.value(n) for g, n in zip(self.groups, counts))
        return values, total


def _fail(con: LinearConstraint, why: str) -> ModelError:
    return ModelError(f"unsupported {con.tag!r} constraint: {why}")


def compile_model(model: ModelSpec) -> Compiled:
    """Recognize the tagged constraint families emitted by the builders.

    Raises ModelError for anything outside that structure (unknown tags, ``y``
    variables without a linking constraint, non-zero objective on ``z``/``x``).
    """
    c = Compiled(model)
    for v in model.variables:
        if v.family == "z":
            c.site_pos[v.index[0]] = len(c.site_ids)
            c.site_ids.append(v.index[0])
            c.z_vars.append(v)
    for v in model.variables:
        if v.family == "x":
            j, u, t = v.index
            if j not in c.site_pos:
                raise ModelError(f"{v.name} refers to a site without a z variable")
            c.x_pos[v.index] = len(c.x_vars)
            c.x_vars.append(v)
            c.x_site.append(c.site_pos[j])
            c.x_type.append(u)
            c.x_period.append(t)
    c.x_groups = [[] for _ in c.x_vars]
    per_type_period: dict[tuple[int, int], int] = {}
    for u, t in zip(c.x_type, c.x_period):
        per_type_period[u, t] = per_type_period.get((u, t), 0) + 1
    c.types = sorted(set(c.x_type))
    c.periods = sorted(set(c.x_period))

    obj: dict[VarId, Fraction] = {}
    for v, coef in model.objective:
        coef = Fraction(coef)
        if v.family in ("z", "x") and coef != 0:
            raise ModelError(f"objective coefficient on {v.name} is not supported")
        obj[v] = coef
    denominators = [f.denominator for f in obj.values()]
    c.scale = math.lcm(*denominators) if denominators else 1

    linked_x: set[int] = set()
    y_owner: dict[VarId, int] = {}
    one_k: set[int] = set()
    pending_one_k: list[tuple[LinearConstraint, list[VarId]]] = []

    for con in model.constraints:
        tag = con.tag
        terms = con.terms
        if tag in ("coverage-link", "server-count"):
            if con.relation != ">=" or con.rhs != 0:
                raise _fail(con, "expected '>= 0'")
            xs = [v for v, a in terms if v.family == "x"]
            ys = [(v, a) for v, a in terms if v.family.startswith("y")]
            if any(a != 1 for v, a in terms if v.family == "x") or not ys:
                raise _fail(con, "x coefficients must be 1 and some y must appear")
            if any(v.family == "z" for v, _ in terms):
                raise _fail(con, "z may not appear")
            fam = "y_det" if tag == "coverage-link" else "y_prob"
            if any(v.family != fam for v, _ in ys):
                raise _fail(con, f"only {fam} variables allowed")
            i, u, t = ys[0][0].index[0], ys[0][0].index[1], ys[0][0].index[-1]
            by_k: dict[int, VarId] = {}
            for v, a in ys:
                k = v.index[2] if fam == "y_prob" else 1
                if (v.index[0], v.index[1], v.index[-1]) != (i, u, t) or a != -k:
                    raise _fail(con, "y terms must share (i,u,t) and carry coefficient -k")
                by_k[k] = v
            if sorted(by_k) != list(range(1, len(by_k) + 1)):
                raise _fail(con, "k values must be 1..K")
            cover = []
            for v in xs:
                p = c.x_pos[v.index]
                if c.x_type[p] != u or c.x_period[p] != t:
                    raise _fail(con, "covering x must match the point's type and period")
                cover.append(p)
            yvars = [by_k[k] for k in range(1, len(by_k) + 1)]
            gid = len(c.groups)
            for y in yvars:
                if y in y_owner:
                    raise _fail(con, f"{y.name} is linked twice")
                y_owner[y] = gid
            coefs = [obj.get(y, Fraction(0)) * c.scale for y in yvars]
            if any(f.denominator != 1 for f in coefs):
                raise AssertionError("objective scaling failed")
            g = Group((i, u, t), cover, yvars, [int(f) for f in coefs])
            g.finish()
            c.groups.append(g)
            for p in cover:
                c.x_groups[p].append(gid)
        elif tag == "one-k":
            if con.relation != "<=" or con.rhs != 1 or any(a != 1 or v.family != "y_prob" for v, a in terms):
                raise _fail(con, "expected sum of y_prob <= 1")
            pending_one_k.append((con, [v for v, _ in terms]))
        elif tag == "fleet-limit":
            if con.relation != "<=" or any(a != 1 or v.family != "x" for v, a in terms):
                raise _fail(con, "expected sum of x <= P")
            keys = {(v.index[1], v.index[2]) for v, _ in terms}
            if len(keys) > 1:
                raise _fail(con, "mixes types or periods")
            if keys:
                key = keys.pop()
                bound = math.floor(Fraction(con.rhs))
                c.fleet[key] = min(bound, c.fleet.get(key, bound))
                # a fleet constraint over a subset of sites would be a different model
                if len(terms) != per_type_period[key]:
                    raise _fail(con, "must range over every site")
            elif con.rhs < 0:
                c.infeasible = "fleet-limit"
        elif tag == "capacity":
            xs = [(v, a) for v, a in terms if v.family == "x"]
            zs = [(v, a) for v, a in terms if v.family == "z"]
            if con.relation != "<=" or con.rhs != 0 or len(zs) != 1 or any(a != 1 for _, a in xs):
                raise _fail(con, "expected sum_u x - C z <= 0")
            s = c.site_pos[zs[0][0].index[0]]
            cap = -Fraction(zs[0][1])
            keys = {(v.index[0], v.index[2]) for v, _ in xs}
            if len(keys) != 1 or next(iter(keys))[0] != c.site_ids[s]:
                raise _fail(con, "x terms must share the z site and one period")
            t = next(iter(keys))[1]
            bound = math.floor(cap)
            c.capacity[s, t] = min(bound, c.capacity.get((s, t), bound))
            for v, _ in xs:
                linked_x.add(c.x_pos[v.index])
        elif tag == "site-link":
            if con.relation != "<=" or con.rhs != 0 or len(terms) != 2:
                raise _fail(con, "expected x - z <= 0")
            (xv, xa), (zv, za) = sorted(terms, key=lambda term: term[0].family)
            if xv.family != "x" or zv.family != "z" or xa != 1 or za != -1 or xv.index[0] != zv.index[0]:
                raise _fail(con, "expected x[j,u,t] - z[j] <= 0")
            linked_x.add(c.x_pos[xv.index])
        elif tag == "epsilon":
            if con.relation != "<=" or any(a != 1 or v.family != "z" for v, a in terms) or len(terms) != len(c.z_vars):
                raise _fail(con, "expected sum of all z <= eps")
            eps = math.floor(Fraction(con.rhs))
            c.epsilon = eps if c.epsilon is None else min(c.epsilon, eps)
        elif tag == "fixed":
            if con.relation != "=" or len(terms) != 1 or terms[0][1] != 1:
                raise _fail(con, "expected v = value")
            v = terms[0][0]
            val = Fraction(con.rhs)
            if val not in (0, 1):
                c.infeasible = f"fixed {v.name} = {val} is not binary"
                continue
            if v.family == "z":
                s = c.site_pos[v.index[0]]
                if c.fixed_z.setdefault(s, int(val)) != val:
                    c.infeasible = f"{v.name} fixed to both 0 and 1"
            elif v.family == "x":
                p = c.x_pos[v.index]
                if c.fixed_x.setdefault(p, int(val)) != val:
                    c.infeasible = f"{v.name} fixed to both 0 and 1"
            else:
                raise _fail(con, "only z and x can be fixed")
        else:
            raise ModelError(f"unknown constraint tag {tag!r}")

    for con, ys in pending_one_k:
        owners = {y_owner.get(y) for y in ys}
        if len(owners) != 1 or None in owners:
            raise _fail(con, "must cover exactly the y variables of one server-count constraint")
        gid = owners.pop()
        if len(ys) != len(c.groups[gid].yvars):
            raise _fail(con, "must cover every k of its point")
        one_k.add(gid)
    for gid, g in enumerate(c.groups):
        if g.yvars[0].family == "y_prob" and gid not in one_k:
            raise ModelError(f"{g.yvars[0].name}: probabilistic terms need a one-k constraint")
    for v in model.variables:
        if v.family.startswith("y") and v not in y_owner:
            raise ModelError(f"{v.name} is not linked to any x")
    if len(linked_x) != len(c.x_vars):
        raise ModelError("every x needs a site-link or capacity constraint tying it to its z")
    if c.epsilon is not None and c.epsilon < sum(c.fixed_z.values()):
        c.infeasible = "epsilon"
    return c
