"""Depth-first branch-and-bound over station (``z``) and allocation (``x``) decisions.

``y`` variables are never branched on: once the ``x`` of a period are fixed, each
(point, type, period) term independently takes its best ``k`` among the vehicles
covering it.  With ``z`` fixed the periods no longer interact (fleet and capacity
rows are per period), so the search is two-level:

1. DFS over ``z`` in order of decreasing coverage potential.  The bound of a node is
   the sum over periods of the period optimum with every undecided site open; it
   ignores the station cap, so it never underestimates the subtree.
2. For a given set of open sites, each period is solved by DFS over its ``x``
   (vehicles of type 0 first, then type 1, ...), bounding with the current partial
   objective plus, for every demand term, the best value reachable with the
   vehicles still free to cover it.  Period optima are memoized per open set.
"""

from __future__ import annotations

import time
from fractions import Fraction

from ..formulation import ModelSpec
from .compiled import Compiled, compile_model
from .solution import INFEASIBLE, OPTIMAL, TIME_LIMIT, Solution

NEG = -1


class _Timeout(Exception):
    pass


class BranchAndBound:
    def __init__(self, compiled: Compiled, time_limit: float | None = None):
        self.c = compiled
        self.time_limit = time_limit
        self.start = time.perf_counter()
        self.nodes = 0
        self.period_solves = 0
        self._memo: dict[tuple[int, frozenset], tuple[int, tuple[int, ...]] | None] = {}
        self.incumbent: list = [NEG, None]
        c = compiled
        self.period_x: dict[int, list[int]] = {t: [] for t in c.periods}
        for p, t in enumerate(c.x_period):
            self.period_x[t].append(p)
        self.period_groups: dict[int, list[int]] = {t: [] for t in c.periods}
        for gid, g in enumerate(c.groups):
            self.period_groups.setdefault(g.key[2], []).append(gid)
        # potential of an x: what it earns alone; of a site: summed over its x
        self.x_potential = [sum(c.groups[g].value(1) for g in c.x_groups[p]) for p in range(len(c.x_vars))]
        site_pot = [0] * len(c.site_ids)
        for p, s in enumerate(c.x_site):
            site_pot[s] += self.x_potential[p]
        self.site_order = sorted(range(len(c.site_ids)), key=lambda s: (-site_pot[s], c.site_ids[s]))

    def _tick(self) -> None:
        self.nodes += 1
        if self.time_limit is not None and self.nodes % 256 == 0:
            if time.perf_counter() - self.start > self.time_limit:
                raise _Timeout

    # -- per-period search ---------------------------------------------------

    def period_optimum(self, t: int, open_sites: frozenset) -> tuple[int, tuple[int, ...]] | None:
        """Best scaled objective of period ``t`` given open site positions (None if infeasible)."""
        key = (t, open_sites)
        if key not in self._memo:
            self._memo[key] = self._solve_period(t, open_sites)
        return self._memo[key]

    def _solve_period(self, t: int, open_sites: frozenset):
        self.period_solves += 1
        c = self.c
        groups = c.groups
        gids = self.period_groups.get(t, [])
        cnt = {g: 0 for g in gids}
        free = {g: 0 for g in gids}
        rem = {u: c.fleet_of(u, t) for u in c.types}
        cap: dict[int, int] = {}
        chosen: list[int] = []
        order = []
        for p in self.period_x[t]:
            s = c.x_site[p]
            fx = c.fixed_x.get(p)
            if s not in open_sites:
                if fx == 1:
                    return None
                continue
            if fx == 0:
                continue
            cap.setdefault(s, c.cap_of(s, t))
            if fx == 1:
                u = c.x_type[p]
                rem[u] -= 1
                cap[s] -= 1
                if rem[u] < 0 or cap[s] < 0:
                    return None
                chosen.append(p)
                for g in c.x_groups[p]:
                    cnt[g] += 1
            else:
                order.append(p)
        order.sort(key=lambda p: (c.x_type[p], -self.x_potential[p], c.site_ids[c.x_site[p]]))
        for p in order:
            for g in c.x_groups[p]:
                free[g] += 1
        group_type = {g: groups[g].key[1] for g in gids}

        best_val = NEG
        best_set: tuple[int, ...] = ()

        def bound() -> int:
            total = 0
            for g in gids:
                extra = free[g]
                r = rem[group_type[g]]
                total += groups[g].value(cnt[g] + (extra if extra < r else r))
            return total

        def dfs(pos: int) -> None:
            nonlocal best_val, best_set
            self._tick()
            if pos == len(order):
                val = sum(groups[g].value(cnt[g]) for g in gids)
                if val > best_val:
                    best_val, best_set = val, tuple(chosen)
                return
            if bound() <= best_val:
                return
            p = order[pos]
            u, s = c.x_type[p], c.x_site[p]
            touched = c.x_groups[p]
            for g in touched:
                free[g] -= 1
            if rem[u] > 0 and cap[s] > 0:
                rem[u] -= 1
                cap[s] -= 1
                chosen.append(p)
                for g in touched:
                    cnt[g] += 1
                dfs(pos + 1)
                for g in touched:
                    cnt[g] -= 1
                chosen.pop()
                rem[u] += 1
                cap[s] += 1
            dfs(pos + 1)
            for g in touched:
                free[g] += 1

        dfs(0)
        return best_val, best_set

    # -- station search ------------------------------------------------------

    def bound(self, z_partial: dict[int, int]) -> int | None:
        """Upper bound for the subtree where site positions in ``z_partial`` are decided.

        Undecided sites (unless fixed closed) are treated as open.  None means the
        subtree has no feasible completion even then.
        """
        c = self.c
        open_sites = frozenset(
            s for s in range(len(c.site_ids)) if z_partial.get(s, 1 if c.fixed_z.get(s, 1) else 0) == 1
        )
        total = 0
        for t in c.periods:
            res = self.period_optimum(t, open_sites)
            if res is None:
                return None
            total += res[0]
        return total

    def solve(self):
        """Return (best scaled value, z dict, chosen x positions) or None if infeasible."""
        c = self.c
        if c.infeasible:
            return None
        eps = c.epsilon if c.epsilon is not None else len(c.site_ids)
        order = self.site_order
        n = len(order)
        z: dict[int, int] = {}
        best = self.incumbent = [NEG, None]

        def dfs(depth: int, opened: int) -> None:
            self._tick()
            b = self.bound(z)
            if b is None or b <= best[0]:
                return
            undecided = [s for s in order[depth:] if c.fixed_z.get(s, 1) == 1]
            if opened + sum(1 for s in undecided if s not in z) <= eps:
                # the bound's configuration respects the cap: it is attained here
                full = dict(z)
                for s in order[depth:]:
                    full[s] = c.fixed_z.get(s, 1)
                best[0], best[1] = b, full
                return
            if depth == n:
                return
            s = order[depth]
            fixed = c.fixed_z.get(s)
            choices = (fixed,) if fixed is not None else (1, 0)
            for val in choices:
                if val == 1 and opened >= eps:
                    continue
                z[s] = val
                dfs(depth + 1, opened + val)
                del z[s]

        dfs(0, 0)
        if best[1] is None:
            return None
        return best[0], best[1]

    def extract(self, zfull: dict[int, int]) -> tuple[list[int], list[int]]:
        """z/x vectors for a leaf, closing opened sites that hold no vehicle."""
        c = self.c
        open_sites = frozenset(s for s, v in zfull.items() if v)
        x_on = [0] * len(c.x_vars)
        for t in c.periods:
            _, chosen = self.period_optimum(t, open_sites)
            for p in chosen:
                x_on[p] = 1
        used = {c.x_site[p] for p, on in enumerate(x_on) if on}
        z_open = [0] * len(c.site_ids)
        for s in open_sites:
            if s in used or c.fixed_z.get(s) == 1:
                z_open[s] = 1
        return z_open, x_on


def solve_exact(model: ModelSpec, time_limit: float | None = None) -> Solution:
    """Solve a location model to proven optimality.

    Status is ``optimal`` (objective == bound), ``infeasible`` (contradictory
    fixes or caps) or ``time-limit`` (best incumbent so far plus a valid bound).
    """
    start = time.perf_counter()
    compiled = compile_model(model)
    bb = BranchAndBound(compiled, time_limit)
    stats = {"method": "exact"}
    try:
        result = bb.solve()
    except _Timeout:
        return _timeout_solution(bb, start, stats)
    stats.update(nodes=bb.nodes, period_solves=bb.period_solves, time=time.perf_counter() - start)
    if result is None:
        return Solution({}, Fraction(0), INFEASIBLE, None, stats)
    value, zfull = result
    z_open, x_on = bb.extract(zfull)
    assignment, scaled = compiled.assignment(z_open, x_on)
    assert scaled == value, "decoded objective differs from search value"
    objective = compiled.to_fraction(scaled)
    return Solution(assignment, objective, OPTIMAL, objective, stats)


def _timeout_solution(bb: BranchAndBound, start: float, stats: dict) -> Solution:
    c = bb.c
    stats.update(nodes=bb.nodes, period_solves=bb.period_solves, time=time.perf_counter() - start)
    # cheap global bound: every term served at its best reachable level
    bound = 0
    for g in c.groups:
        reachable = sum(1 for p in g.cover if c.fixed_x.get(p) != 0 and c.fixed_z.get(c.x_site[p]) != 0)
        bound += g.value(reachable)
    best_val, zfull = bb.incumbent
    if zfull is None:
        return Solution({}, Fraction(0), TIME_LIMIT, c.to_fraction(bound), stats)
    z_open, x_on = bb.extract(zfull)
    assignment, scaled = c.assignment(z_open, x_on)
    return Solution(assignment, c.to_fraction(scaled), TIME_LIMIT, c.to_fraction(max(bound, scaled)), stats)
