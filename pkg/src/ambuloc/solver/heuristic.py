"""Greedy construction plus first-improvement local search for location models.

Construction repeatedly places the single vehicle (site, type, period) with the
largest marginal gain that keeps fleet, capacity and station-cap limits, using
lazily re-evaluated gains.  Local search then samples moves

* relocate -- move one vehicle to another site (same type and period),
* swap     -- exchange the sites of two vehicles of different types in one period,
* add      -- place an idle vehicle,
* exchange -- close one station and move all of its vehicles to a closed site,

and applies the first one that strictly improves the objective.  All randomness
comes from ``random.Random(seed)``.
"""

from __future__ import annotations

import heapq
import random
import time

from ..formulation import ModelSpec
from ..plan import Plan
from .compiled import Compiled, compile_model
from .solution import FEASIBLE, INFEASIBLE, Solution


class _State:
    def __init__(self, c: Compiled):
        self.c = c
        self.x_on = bytearray(len(c.x_vars))
        self.z_open = bytearray(len(c.site_ids))
        self.opened = 0
        self.cnt = [0] * len(c.groups)
        self.value = 0
        self.rem = {(u, t): c.fleet_of(u, t) for u in c.types for t in c.periods}
        self.cap = {}
        self.site_load = [0] * len(c.site_ids)  # vehicles over all periods
        self.eps = c.epsilon if c.epsilon is not None else len(c.site_ids)
        self.site_x: list[list[int]] = [[] for _ in c.site_ids]
        for p, s in enumerate(c.x_site):
            self.site_x[s].append(p)
        self.slot: dict[tuple[int, int, int], int] = {
            (s, u, t): p for p, (s, u, t) in enumerate(zip(c.x_site, c.x_type, c.x_period))
        }

    def cap_left(self, s: int, t: int) -> int:
        key = (s, t)
        if key not in self.cap:
            self.cap[key] = self.c.cap_of(s, t)
        return self.cap[key]

    def gain(self, p: int) -> int:
        groups, cnt = self.c.groups, self.cnt
        total = 0
        for g in self.c.x_groups[p]:
            grp = groups[g]
            n = cnt[g]
            total += grp.value(n + 1) - grp.value(n)
        return total

    def loss(self, p: int) -> int:
        groups, cnt = self.c.groups, self.cnt
        total = 0
        for g in self.c.x_groups[p]:
            grp = groups[g]
            n = cnt[g]
            total += grp.value(n) - grp.value(n - 1)
        return total

    def can_open(self, s: int) -> bool:
        return self.z_open[s] or (self.opened < self.eps and self.c.fixed_z.get(s, 1) == 1)

    def can_place(self, p: int) -> bool:
        c = self.c
        if self.x_on[p] or c.fixed_x.get(p) == 0:
            return False
        s, u, t = c.x_site[p], c.x_type[p], c.x_period[p]
        return self.rem[u, t] > 0 and self.cap_left(s, t) > 0 and self.can_open(s)

    def open(self, s: int) -> None:
        if not self.z_open[s]:
            self.z_open[s] = 1
            self.opened += 1

    def close(self, s: int) -> None:
        if self.z_open[s]:
            self.z_open[s] = 0
            self.opened -= 1

    def add(self, p: int) -> None:
        c = self.c
        s, u, t = c.x_site[p], c.x_type[p], c.x_period[p]
        self.value += self.gain(p)
        self.open(s)
        self.x_on[p] = 1
        self.rem[u, t] -= 1
        self.cap[s, t] = self.cap_left(s, t) - 1
        self.site_load[s] += 1
        for g in c.x_groups[p]:
            self.cnt[g] += 1

    def remove(self, p: int) -> None:
        c = self.c
        s, u, t = c.x_site[p], c.x_type[p], c.x_period[p]
        self.value -= self.loss(p)
        self.x_on[p] = 0
        self.rem[u, t] += 1
        self.cap[s, t] += 1
        self.site_load[s] -= 1
        for g in c.x_groups[p]:
            self.cnt[g] -= 1

    def removable(self, p: int) -> bool:
        return self.x_on[p] and self.c.fixed_x.get(p) != 1

    def closable(self, s: int) -> bool:
        return self.z_open[s] and self.site_load[s] == 0 and self.c.fixed_z.get(s) != 1


def _greedy(st: _State) -> None:
    c = st.c
    heap = []
    for p in range(len(c.x_vars)):
        if st.can_place(p):
            g = st.gain(p)
            if g > 0:
                heap.append((-g, p))
    heapq.heapify(heap)
    while heap:
        neg, p = heapq.heappop(heap)
        if not st.can_place(p):
            continue
        g = st.gain(p)
        if g <= 0:
            continue
        if heap and g < -heap[0][0]:
            heapq.heappush(heap, (-g, p))
            continue
        st.add(p)


def _local_search(st: _State, rng: random.Random, budget: int, deadline: float | None) -> int:
    c = st.c
    n_sites = len(c.site_ids)
    moves = 0
    evaluations = 0
    stall = 0
    stall_limit = max(200, 4 * len(c.x_vars))

    def placed():
        return [p for p in range(len(c.x_vars)) if st.x_on[p] and c.fixed_x.get(p) != 1]

    on = placed()
    while evaluations < budget and stall < stall_limit:
        if deadline is not None and evaluations % 64 == 0 and time.perf_counter() > deadline:
            break
        evaluations += 1
        kind = rng.random()
        before = st.value
        if kind < 0.55 and on:
            # relocate
            p = on[rng.randrange(len(on))]
            if not st.x_on[p]:
                on = placed()
                continue
            s, u, t = c.x_site[p], c.x_type[p], c.x_period[p]
            s2 = rng.randrange(n_sites)
            q = st.slot.get((s2, u, t))
            if q is None or s2 == s or st.x_on[q] or c.fixed_x.get(q) == 0:
                stall += 1
                continue
            st.remove(p)
            reopen = False
            if not st.z_open[s2] and st.opened >= st.eps and st.closable(s):
                st.close(s)
                reopen = True
            if st.can_place(q):
                st.add(q)
                if st.value > before:
                    if st.closable(s):
                        st.close(s)
                    moves += 1
                    stall = 0
                    on = placed()
                    continue
                st.remove(q)
                if st.closable(s2):
                    st.close(s2)
            if reopen:
                st.open(s)
            st.add(p)
        elif kind < 0.75 and on and len(c.types) > 1:
            # swap two vehicles of different types within a period
            p1 = on[rng.randrange(len(on))]
            p2 = on[rng.randrange(len(on))]
            s1, u1, t1 = c.x_site[p1], c.x_type[p1], c.x_period[p1]
            s2, u2, t2 = c.x_site[p2], c.x_type[p2], c.x_period[p2]
            if t1 != t2 or u1 == u2 or s1 == s2 or not (st.x_on[p1] and st.x_on[p2]):
                stall += 1
                continue
            q1, q2 = st.slot.get((s1, u2, t1)), st.slot.get((s2, u1, t1))
            if q1 is None or q2 is None or st.x_on[q1] or st.x_on[q2] or c.fixed_x.get(q1) == 0 or c.fixed_x.get(q2) == 0:
                stall += 1
                continue
            st.remove(p1)
            st.remove(p2)
            st.add(q1)
            st.add(q2)
            if st.value > before:
                moves += 1
                stall = 0
                on = placed()
                continue
            st.remove(q1)
            st.remove(q2)
            st.add(p1)
            st.add(p2)
        elif kind < 0.85:
            # add an idle vehicle
            p = rng.randrange(len(c.x_vars)) if c.x_vars else None
            if p is not None and st.can_place(p) and st.gain(p) > 0:
                st.add(p)
                moves += 1
                stall = 0
                on = placed()
                continue
        else:
            # exchange an open station for a closed one
            opened = [s for s in range(n_sites) if st.z_open[s] and c.fixed_z.get(s) != 1]
            if not opened:
                stall += 1
                continue
            s = opened[rng.randrange(len(opened))]
            s2 = rng.randrange(n_sites)
            if st.z_open[s2] or c.fixed_z.get(s2) == 0:
                stall += 1
                continue
            mine = [p for p in st.site_x[s] if st.x_on[p]]
            if any(c.fixed_x.get(p) == 1 for p in mine):
                stall += 1
                continue
            targets = [st.slot.get((s2, c.x_type[p], c.x_period[p])) for p in mine]
            if any(q is None or c.fixed_x.get(q) == 0 for q in targets):
                stall += 1
                continue
            per_t: dict[int, int] = {}
            for p in mine:
                per_t[c.x_period[p]] = per_t.get(c.x_period[p], 0) + 1
            if any(n > c.cap_of(s2, t) for t, n in per_t.items()):
                stall += 1
                continue
            for p in mine:
                st.remove(p)
            st.close(s)
            st.open(s2)
            for q in targets:
                st.add(q)
            if st.value > before:
                moves += 1
                stall = 0
                on = placed()
                continue
            for q in targets:
                st.remove(q)
            st.close(s2)
            st.open(s)
            for p in mine:
                st.add(p)
        stall += 1
    return moves


def _seed_state(st: _State, initial: Plan | dict | None) -> None:
    """Apply an initial allocation, skipping anything the model forbids."""
    if initial is None:
        return
    c = st.c
    if isinstance(initial, Plan):
        keys = sorted(initial.alloc)
    else:
        keys = sorted(v.index for v, val in initial.items() if v.family == "x" and val)
    for j, u, t in keys:
        p = c.x_pos.get((j, u, t))
        if p is not None and st.can_place(p):
            st.add(p)


def solve_heuristic(
    model: ModelSpec,
    seed: int = 0,
    budget: int = 20000,
    initial: Plan | dict | None = None,
    time_limit: float | None = None,
) -> Solution:
    """Feasible solution by greedy construction and local search.

    ``budget`` caps the number of local-search move evaluations.  ``initial`` (a Plan
    or an assignment) seeds the construction, e.g. the plan found for the previous
    station cap in a sweep.
    """
    start = time.perf_counter()
    c = compile_model(model)
    stats = {"method": "heuristic", "seed": seed, "budget": budget}
    st = _State(c)
    fixed_open = [s for s, v in c.fixed_z.items() if v == 1]
    infeasible = c.infeasible
    if not infeasible:
        for s in fixed_open:
            st.open(s)
        if st.opened > st.eps:
            infeasible = "epsilon"
    if not infeasible:
        for p, v in sorted(c.fixed_x.items()):
            if v == 1:
                s, u, t = c.x_site[p], c.x_type[p], c.x_period[p]
                if c.fixed_z.get(s) == 0 or not st.can_place(p):
                    infeasible = f"fixed {c.x_vars[p].name} cannot be placed"
                    break
                st.add(p)
    if infeasible:
        stats.update(time=time.perf_counter() - start, reason=infeasible)
        return Solution({}, c.to_fraction(0), INFEASIBLE, None, stats)

    _seed_state(st, initial)
    _greedy(st)
    deadline = start + time_limit if time_limit is not None else None
    rng = random.Random(seed)
    stats["moves"] = _local_search(st, rng, budget, deadline)
    _greedy(st)
    for s in range(len(c.site_ids)):
        if st.closable(s):
            st.close(s)
    assignment, scaled = c.assignment(st.z_open, st.x_on)
    assert scaled == st.value, "incremental objective drifted"
    stats["time"] = time.perf_counter() - start
    return Solution(assignment, c.to_fraction(scaled), FEASIBLE, None, stats)
