"""Reference computations that share no code with the solver package.

``mask_oracle`` works from the raw instance data: for every period it scores all
per-type sets of occupied sites (at most one vehicle of a type per site), keeps
the best value for each union of used sites, spreads it to supersets, and finally
maximizes over the set of opened stations.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

ZERO, ONE = Fraction(0), Fraction(1)


def q_ref(b, k: int) -> Fraction:
    b = Fraction(b)
    if b < 0:
        b = ZERO
    if b > 1:
        b = ONE
    return ONE - b**k


def coverage_masks(inst):
    """cover[i][u] as a bitmask of sites within the type's standard (ties covered)."""
    out = []
    for i in range(len(inst.demand_points)):
        row = []
        for amb in inst.ambulance_types:
            m = 0
            for j in range(len(inst.sites)):
                if inst.travel_time[j][i] <= amb.response_standard:
                    m |= 1 << j
            row.append(m)
        out.append(row)
    return out


def reliabilities(inst):
    """q[i][u][t] as a list indexed by k (index 0 unused)."""
    pts = inst.demand_points
    n = len(pts)
    out = []
    for i in range(n):
        per_u = []
        for u, amb in enumerate(inst.ambulance_types):
            hood = [p for p in range(n) if inst.demand_to_demand_time[i][p] <= amb.response_standard]
            per_t = []
            for t in range(inst.num_periods):
                load = sum((Fraction(pts[p].service_time_demand[u][t]) for p in hood), ZERO)
                per_t.append([None] + [q_ref(load / k, k) for k in range(1, inst.k_max + 1)])
            per_u.append(per_t)
        out.append(per_u)
    return out


def term(inst, kind, q, i, u, t, n) -> Fraction:
    """Value of demand term (i, u, t) when ``n`` vehicles of type u cover it."""
    d = Fraction(inst.demand_points[i].demand[u][t])
    if n <= 0:
        return ZERO
    if kind == "deterministic":
        return d
    return d * max(q[i][u][t][k] for k in range(1, min(inst.k_max, n) + 1))


def _popcount(m: int) -> int:
    return bin(m).count("1")


def _best_by_union(inst, kind, cover, q, periods):
    """Best value of one allocation (shared by ``periods``) for each union of used sites."""
    n_j = len(inst.sites)
    n_i = len(inst.demand_points)
    per_type = []
    for u, amb in enumerate(inst.ambulance_types):
        opts = []
        for m in range(1 << n_j):
            if _popcount(m) > amb.fleet_size:
                continue
            val = sum(
                (term(inst, kind, q, i, u, t, _popcount(m & cover[i][u])) for i in range(n_i) for t in periods),
                ZERO,
            )
            opts.append((m, val))
        per_type.append(opts)
    caps = [s.capacity for s in inst.sites]
    best = [None] * (1 << n_j)
    for combo in itertools.product(*per_type):
        load = [0] * n_j
        union = 0
        ok = True
        for m, _ in combo:
            union |= m
            for j in range(n_j):
                if m >> j & 1:
                    load[j] += 1
                    if load[j] > caps[j]:
                        ok = False
        if not ok:
            continue
        val = sum((v for _, v in combo), ZERO)
        if best[union] is None or val > best[union]:
            best[union] = val
    # spread to supersets: g[Z] = best allocation using only sites in Z
    g = [ZERO if b is None else b for b in best]
    for j in range(n_j):
        bit = 1 << j
        for z in range(1 << n_j):
            if z & bit and g[z ^ bit] > g[z]:
                g[z] = g[z ^ bit]
    return g


def mask_oracle(inst, kind, *, epsilon=None, static=False, open_exact=None, must_open=()):
    """Optimal objective, measured over all periods.

    ``static`` forces one allocation repeated in every period.  ``open_exact`` fixes
    the set of opened stations; ``must_open`` lists stations that must be open.
    """
    cover = coverage_masks(inst)
    q = reliabilities(inst) if kind == "probabilistic" else None
    periods = range(inst.num_periods)
    if static:
        tables = [_best_by_union(inst, kind, cover, q, list(periods))]
    else:
        tables = [_best_by_union(inst, kind, cover, q, [t]) for t in periods]
    n_j = len(inst.sites)
    need = sum(1 << j for j in must_open)
    best = None
    for z in range(1 << n_j):
        if open_exact is not None and z != sum(1 << j for j in open_exact):
            continue
        if epsilon is not None and _popcount(z) > epsilon:
            continue
        if z & need != need:
            continue
        val = sum((g[z] for g in tables), ZERO)
        if best is None or val > best:
            best = val
    return best


def evaluate_allocation(inst, kind, alloc) -> Fraction:
    """Multi-period value of a fixed allocation given as {(j, u, t): 1}."""
    cover = coverage_masks(inst)
    q = reliabilities(inst) if kind == "probabilistic" else None
    total = ZERO
    for t in range(inst.num_periods):
        for u in range(len(inst.ambulance_types)):
            m = sum(1 << j for (j, uu, tt), c in alloc.items() if c and uu == u and tt == t)
            for i in range(len(inst.demand_points)):
                total += term(inst, kind, q, i, u, t, _popcount(m & cover[i][u]))
    return total


def brute_force_model(model, limit: int = 18):
    """Literal enumeration of every 0/1 vector of a tiny ModelSpec; returns (best, argmax)."""
    vs = list(model.variables)
    if len(vs) > limit:
        raise ValueError(f"{len(vs)} variables is too many to enumerate")
    obj = {v: Fraction(c) for v, c in model.objective}
    cons = []
    for con in model.constraints:
        cons.append(([(vs.index(v), Fraction(c)) for v, c in con.terms], con.relation, Fraction(con.rhs)))
    best, arg = None, None
    for bits in itertools.product((0, 1), repeat=len(vs)):
        ok = True
        for terms, rel, rhs in cons:
            lhs = sum((c * bits[k] for k, c in terms), ZERO)
            if (rel == "<=" and lhs > rhs) or (rel == ">=" and lhs < rhs) or (rel == "=" and lhs != rhs):
                ok = False
                break
        if not ok:
            continue
        val = sum((obj.get(v, ZERO) * b for v, b in zip(vs, bits)), ZERO)
        if best is None or val > best:
            best, arg = val, dict(zip(vs, bits))
    return best, arg
