"""Parameterized synthetic instances.

Points and sites live in a square city of side ``area_km``; travel times are
straight-line distances at ``speed_kmph``, rounded to 0.01 minute.  Demand points
are split into two designated clusters.  Under the ``two-peak-diurnal`` profile
cluster 0 peaks in the first half of the day and cluster 1 in the second half, so
the best vehicle positions move during the day.  Under ``uniform`` every period
carries the same demand.

Service-time demand is ``demand * mean_service_minutes / period_length_minutes``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

import numpy as np

from .instance import AmbulanceType, DemandPoint, Instance, Site

PROFILES = ("uniform", "two-peak-diurnal")
SPATIAL_MODELS = ("uniform-square", "clustered")


@dataclass(frozen=True)
class GeneratorConfig:
    num_demand_points: int = 60
    num_sites: int = 200
    num_periods: int = 24
    seed: int = 0
    demand_profile: str = "two-peak-diurnal"
    spatial_model: str = "uniform-square"
    area_km: float = 18.0
    speed_kmph: float = 25.0
    calls_per_period: float = 6.0  # expected calls per period over the whole city, all types
    peak_ratio: float = 4.0  # peak intensity relative to off-peak
    type_shares: tuple[float, ...] = (0.3, 0.7)
    types: tuple[tuple[str, int, float], ...] = (("ALS", 7, 10.0), ("BLS", 21, 8.0))
    capacity: int = 2
    k_max: int = 3
    mean_service_minutes: float = 40.0
    period_length_minutes: float = 60.0
    cluster_spread: float = 0.06  # point std-dev as a fraction of area_km (clustered model)
    site_uniform_share: float = 0.2  # share of sites placed uniformly (clustered model)

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(tuple(t) for t in self.types))
        object.__setattr__(self, "type_shares", tuple(self.type_shares))
        for name in ("num_demand_points", "num_sites", "num_periods", "capacity", "k_max"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.demand_profile not in PROFILES:
            raise ValueError(f"demand_profile must be one of {PROFILES}")
        if self.spatial_model not in SPATIAL_MODELS:
            raise ValueError(f"spatial_model must be one of {SPATIAL_MODELS}")
        for name in ("area_km", "speed_kmph", "peak_ratio", "mean_service_minutes", "period_length_minutes"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.calls_per_period < 0:
            raise ValueError("calls_per_period must be non-negative")
        if not self.types:
            raise ValueError("at least one ambulance type is required")
        if len(self.type_shares) != len(self.types) or any(s < 0 for s in self.type_shares):
            raise ValueError("type_shares must give one non-negative share per type")
        if self.k_max > sum(t[1] for t in self.types):
            raise ValueError("k_max cannot exceed the total fleet")

    @classmethod
    def full_scale(cls, **overrides) -> "GeneratorConfig":
        """427 points, 1527 sites, 24 periods, 7 ALS (10 min) and 21 BLS (8 min)."""
        return cls(**{"num_demand_points": 427, "num_sites": 1527, **overrides})

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown generator option(s): {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["types"] = [list(t) for t in self.types]
        doc["type_shares"] = list(self.type_shares)
        return doc


def _q(value: float, places: int) -> Fraction:
    """Round a float to a fixed number of decimals as an exact Fraction."""
    scale = 10**places
    return Fraction(int(round(value * scale)), scale)


def diurnal_profile(num_periods: int, cluster: int, peak_ratio: float) -> list[float]:
    """Relative intensity per period; cluster 0 peaks at T/4, cluster 1 at 3T/4."""
    if num_periods == 1:
        return [1.0]
    center = (num_periods // 4) if cluster == 0 else (3 * num_periods) // 4
    if center == num_periods // 4 and cluster == 1:
        center = min(num_periods - 1, center + 1)
    width = max(num_periods / 12.0, 0.5)
    return [1.0 + (peak_ratio - 1.0) * math.exp(-0.5 * ((t - center) / width) ** 2) for t in range(num_periods)]


def _locations(cfg: GeneratorConfig, rng: np.random.Generator):
    L = cfg.area_km
    n_i, n_j = cfg.num_demand_points, cfg.num_sites
    if cfg.spatial_model == "uniform-square":
        points = rng.uniform(0.0, L, size=(n_i, 2))
        sites = rng.uniform(0.0, L, size=(n_j, 2))
        clusters = (points[:, 0] >= L / 2).astype(int)
        return points, sites, clusters
    centers = np.array([[0.2 * L, 0.2 * L], [0.8 * L, 0.8 * L]])
    clusters = np.arange(n_i) % 2
    points = centers[clusters] + rng.normal(0.0, cfg.cluster_spread * L, size=(n_i, 2))
    n_uniform = int(round(cfg.site_uniform_share * n_j))
    site_cluster = np.arange(n_j - n_uniform) % 2
    near = centers[site_cluster] + rng.normal(0.0, 1.5 * cfg.cluster_spread * L, size=(n_j - n_uniform, 2))
    far = rng.uniform(0.0, L, size=(n_uniform, 2))
    sites = np.vstack([near, far]) if n_uniform else near
    return np.clip(points, 0.0, L), np.clip(sites, 0.0, L), clusters


def generate_instance(config: GeneratorConfig) -> Instance:
    """Deterministic in ``config`` (including its seed)."""
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    points, sites, clusters = _locations(cfg, rng)
    minutes_per_km = 60.0 / cfg.speed_kmph

    def times(a: np.ndarray, b: np.ndarray) -> list[list[Fraction]]:
        dist = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
        return [[_q(v * minutes_per_km, 2) for v in row] for row in dist.tolist()]

    travel = times(sites, points)
    d2d = times(points, points)
    for i in range(cfg.num_demand_points):
        d2d[i][i] = Fraction(0)

    T = cfg.num_periods
    weights = rng.gamma(2.0, 0.5, size=cfg.num_demand_points)
    weights = weights / weights.sum()
    if cfg.demand_profile == "uniform":
        profiles = [[1.0] * T, [1.0] * T]
    else:
        profiles = []
        for cl in (0, 1):
            prof = diurnal_profile(T, cl, cfg.peak_ratio)
            mean = sum(prof) / T
            profiles.append([p / mean for p in prof])
    share_total = sum(cfg.type_shares) or 1.0
    service_factor = Fraction(cfg.mean_service_minutes).limit_denominator(10**6) / Fraction(
        cfg.period_length_minutes
    ).limit_denominator(10**6)

    demand_points = []
    for i in range(cfg.num_demand_points):
        prof = profiles[int(clusters[i])]
        rate = cfg.calls_per_period * float(weights[i])
        demand = []
        for share in cfg.type_shares:
            base = rate * share / share_total
            demand.append([_q(base * prof[t], 3) for t in range(T)])
        service = [[d * service_factor for d in row] for row in demand]
        demand_points.append(DemandPoint(i, demand, service))

    types = [AmbulanceType(u, label, int(fleet), Fraction(std).limit_denominator(10**6)) for u, (label, fleet, std) in enumerate(cfg.types)]
    metadata = {
        "generator": cfg.to_dict(),
        "clusters": [int(c) for c in clusters],
    }
    return Instance(
        demand_points=demand_points,
        sites=[Site(j, cfg.capacity) for j in range(cfg.num_sites)],
        ambulance_types=types,
        num_periods=T,
        travel_time=travel,
        demand_to_demand_time=d2d,
        k_max=cfg.k_max,
        metadata=metadata,
    )


def cluster_peak_periods(instance: Instance) -> dict[int, int]:
    """Period of maximum total demand for each designated cluster (first on ties)."""
    labels = instance.metadata.get("clusters")
    if labels is None:
        raise ValueError("instance has no cluster labels")
    out = {}
    for cl in sorted(set(labels)):
        totals = [
            sum((p.demand[u][t] for p, lab in zip(instance.demand_points, labels) if lab == cl for u in range(instance.n_types)), Fraction(0))
            for t in range(instance.num_periods)
        ]
        out[cl] = max(range(instance.num_periods), key=lambda t: (totals[t], -t))
    return out
