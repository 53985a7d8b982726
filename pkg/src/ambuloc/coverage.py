"""Coverage sets, neighborhoods, busy fractions and reliabilities.

For every demand point ``i`` and type ``u``:

* ``site_covers[i][u]``  -- sites ``j`` with ``r[j][i] <= S_u`` (ties count as covered),
* ``point_neighborhood[i][u]`` -- points ``i'`` with ``time[i][i'] <= S_u``.

The busy fraction of ``k`` type-``u`` servers around ``i`` in period ``t`` is the
neighborhood's service-time demand divided by ``k``; the reliability is
``1 - min(max(b, 0), 1) ** k``.  Clamping keeps ``q`` in ``[0, 1]`` when the
neighborhood is overloaded (``b > 1``), at the price of ``q`` no longer being
monotone in ``k`` there.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .instance import Instance

ONE = Fraction(1)
ZERO = Fraction(0)


@dataclass(frozen=True)
class CoverageSets:
    site_covers: tuple[tuple[tuple[int, ...], ...], ...]  # [i][u] -> sites
    point_neighborhood: tuple[tuple[tuple[int, ...], ...], ...]  # [i][u] -> points
    n_sites: int

    def sites_covering(self, i: int, u: int) -> tuple[int, ...]:
        return self.site_covers[i][u]

    def points_covered_by(self, j: int, u: int) -> tuple[int, ...]:
        """Inverse lookup: demand points that site ``j`` covers for type ``u``."""
        return self._inverse[u][j]

    @property
    def _inverse(self):
        cached = self.__dict__.get("_inverse_cache")
        if cached is None:
            n_u = len(self.site_covers[0]) if self.site_covers else 0
            n_j = self.n_sites
            inv = [[[] for _ in range(n_j)] for _ in range(n_u)]
            for i, row in enumerate(self.site_covers):
                for u, sites in enumerate(row):
                    for j in sites:
                        inv[u][j].append(i)
            cached = tuple(tuple(tuple(p) for p in per_u) for per_u in inv)
            object.__setattr__(self, "_inverse_cache", cached)
        return cached


def build_coverage_sets(instance: Instance) -> CoverageSets:
    standards = [a.response_standard for a in instance.ambulance_types]
    n_i = instance.n_points
    tt = instance.travel_time
    site_covers = []
    neighborhoods = []
    for i in range(n_i):
        column = [row[i] for row in tt]
        d2d = instance.demand_to_demand_time[i]
        site_covers.append(
            tuple(tuple(j for j, r in enumerate(column) if r <= s) for s in standards)
        )
        neighborhoods.append(
            tuple(tuple(k for k in range(n_i) if d2d[k] <= s) for s in standards)
        )
    return CoverageSets(tuple(site_covers), tuple(neighborhoods), instance.n_sites)


def busy_fraction(instance: Instance, sets: CoverageSets, i: int, u: int, k: int, t: int) -> Fraction:
    """Raw (unclamped) busy fraction of ``k`` type-``u`` servers around point ``i`` in period ``t``."""
    if not 1 <= k <= instance.k_max:
        raise ValueError(f"k must be in 1..{instance.k_max}, got {k}")
    pts = instance.demand_points
    load = sum((pts[p].service_time_demand[u][t] for p in sets.point_neighborhood[i][u]), ZERO)
    return load / k


def reliability(b, k: int) -> Fraction:
    """Probability that at least one of ``k`` servers with busy fraction ``b`` is free."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    b = Fraction(b)
    clamped = min(max(b, ZERO), ONE)
    return ONE - clamped**k


@dataclass(frozen=True)
class ReliabilityTable:
    """``busy`` and ``reliability`` indexed ``[i][u][k-1][t]``."""

    busy: tuple
    reliability: tuple
    k_max: int

    def b(self, i: int, u: int, k: int, t: int) -> Fraction:
        return self.busy[i][u][k - 1][t]

    def q(self, i: int, u: int, k: int, t: int) -> Fraction:
        return self.reliability[i][u][k - 1][t]

    def rows(self):
        for i, per_u in enumerate(self.busy):
            for u, per_k in enumerate(per_u):
                for k0, per_t in enumerate(per_k):
                    for t, b in enumerate(per_t):
                        yield i, u, k0 + 1, t, b, self.reliability[i][u][k0][t]


def build_reliability_table(instance: Instance, sets: CoverageSets) -> ReliabilityTable:
    pts = instance.demand_points
    n_t = instance.num_periods
    busy = []
    rel = []
    for i in range(instance.n_points):
        b_u, q_u = [], []
        for u in range(instance.n_types):
            hood = sets.point_neighborhood[i][u]
            loads = [sum((pts[p].service_time_demand[u][t] for p in hood), ZERO) for t in range(n_t)]
            b_k = tuple(tuple(load / k for load in loads) for k in range(1, instance.k_max + 1))
            q_k = tuple(tuple(reliability(b, k) for b in b_k[k - 1]) for k in range(1, instance.k_max + 1))
            b_u.append(b_k)
            q_u.append(q_k)
        busy.append(tuple(b_u))
        rel.append(tuple(q_u))
    return ReliabilityTable(tuple(busy), tuple(rel), instance.k_max)


def dump_reliability_csv(table: ReliabilityTable, path: str | Path) -> None:
    """Debug dump with columns i,u,k,t,b,q (exact rationals as p/q strings)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "u", "k", "t", "b", "q"])
        for i, u, k, t, b, q in table.rows():
            writer.writerow([i, u, k, t, str(b), str(q)])
