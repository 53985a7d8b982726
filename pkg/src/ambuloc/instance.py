"""Problem-instance data model, JSON format and validation.

An instance holds everything the four location models need:

* ambulance types ``U`` with fleet sizes ``P_u`` and response standards ``S_u`` (minutes),
* demand points ``I`` with call counts ``d[u][t]`` and service-time demand ``dbar[u][t]``,
* candidate sites ``J`` with capacities ``C_j``,
* site-to-point travel times ``r[j][i]`` and point-to-point times used for neighborhoods,
* ``k_max``, the largest number of same-type servers credited to one point.

All numeric data is held as :class:`fractions.Fraction` so that objectives are exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

from ._numbers import encode_json_number, to_fraction

INSTANCE_KEYS = (
    "ambulance_types",
    "demand_points",
    "sites",
    "num_periods",
    "k_max",
    "travel_time",
    "demand_to_demand_time",
)


class InstanceFormatError(ValueError):
    """The file is not a syntactically valid instance document."""

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
            if column is not None:
                where.append(f"column {column}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.column = column
        self.field = field


class InstanceValidationError(ValueError):
    """An instance invariant is violated; ``field`` names the offending data."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class AmbulanceType:
    id: int
    label: str
    fleet_size: int
    response_standard: Fraction

    def __post_init__(self):
        object.__setattr__(self, "response_standard", to_fraction(self.response_standard, "response_standard"))
        if not isinstance(self.fleet_size, int) or isinstance(self.fleet_size, bool) or self.fleet_size < 1:
            raise InstanceValidationError("fleet_size", f"type {self.label!r} needs fleet_size >= 1, got {self.fleet_size!r}")
        if self.response_standard <= 0:
            raise InstanceValidationError("response_standard", f"type {self.label!r} needs a positive response standard")


@dataclass(frozen=True)
class DemandPoint:
    """Demand tensors are indexed ``[type][period]``."""

    id: int
    demand: tuple[tuple[Fraction, ...], ...]
    service_time_demand: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        for name in ("demand", "service_time_demand"):
            rows = tuple(
                tuple(to_fraction(v, f"demand_points[{self.id}].{name}") for v in row) for row in getattr(self, name)
            )
            for row in rows:
                if any(v < 0 for v in row):
                    raise InstanceValidationError(name, f"demand point {self.id} has a negative entry")
            object.__setattr__(self, name, rows)


@dataclass(frozen=True)
class Site:
    id: int
    capacity: int

    def __post_init__(self):
        if not isinstance(self.capacity, int) or isinstance(self.capacity, bool) or self.capacity < 1:
            raise InstanceValidationError("capacity", f"site {self.id} needs capacity >= 1, got {self.capacity!r}")


def _matrix(rows, name: str) -> tuple[tuple[Fraction, ...], ...]:
    out = []
    for r, row in enumerate(rows):
        converted = tuple(to_fraction(v, f"{name}[{r}]") for v in row)
        if any(v < 0 for v in converted):
            raise InstanceValidationError(name, f"row {r} has a negative entry")
        out.append(converted)
    return tuple(out)


@dataclass(frozen=True)
class Instance:
    demand_points: tuple[DemandPoint, ...]
    sites: tuple[Site, ...]
    ambulance_types: tuple[AmbulanceType, ...]
    num_periods: int
    travel_time: tuple[tuple[Fraction, ...], ...]
    demand_to_demand_time: tuple[tuple[Fraction, ...], ...]
    k_max: int
    metadata: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "demand_points", tuple(self.demand_points))
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "ambulance_types", tuple(self.ambulance_types))
        object.__setattr__(self, "travel_time", _matrix(self.travel_time, "travel_time"))
        object.__setattr__(self, "demand_to_demand_time", _matrix(self.demand_to_demand_time, "demand_to_demand_time"))
        self._validate()

    def _validate(self) -> None:
        n_i, n_j, n_u = len(self.demand_points), len(self.sites), len(self.ambulance_types)
        if n_i == 0:
            raise InstanceValidationError("demand_points", "at least one demand point is required")
        if n_j == 0:
            raise InstanceValidationError("sites", "at least one site is required")
        if n_u == 0:
            raise InstanceValidationError("ambulance_types", "at least one ambulance type is required")
        for name, items in (("demand_points", self.demand_points), ("sites", self.sites), ("ambulance_types", self.ambulance_types)):
            for pos, item in enumerate(items):
                if item.id != pos:
                    raise InstanceValidationError(name, f"ids must be 0..n-1 in order; position {pos} has id {item.id}")
        labels = [a.label for a in self.ambulance_types]
        if len(set(labels)) != len(labels):
            raise InstanceValidationError("ambulance_types", f"labels must be unique, got {labels}")
        if not isinstance(self.num_periods, int) or isinstance(self.num_periods, bool) or self.num_periods < 1:
            raise InstanceValidationError("num_periods", f"must be a positive integer, got {self.num_periods!r}")
        fleet = sum(a.fleet_size for a in self.ambulance_types)
        if not isinstance(self.k_max, int) or isinstance(self.k_max, bool) or not 1 <= self.k_max <= fleet:
            raise InstanceValidationError("k_max", f"must satisfy 1 <= k_max <= total fleet ({fleet}), got {self.k_max!r}")
        for p in self.demand_points:
            for name in ("demand", "service_time_demand"):
                tensor = getattr(p, name)
                if len(tensor) != n_u or any(len(row) != self.num_periods for row in tensor):
                    raise InstanceValidationError(
                        name, f"demand point {p.id} tensor must be {n_u} types x {self.num_periods} periods"
                    )
        if len(self.travel_time) != n_j or any(len(row) != n_i for row in self.travel_time):
            raise InstanceValidationError("travel_time", f"must be a {n_j} x {n_i} (sites x demand points) matrix")
        d2d = self.demand_to_demand_time
        if len(d2d) != n_i or any(len(row) != n_i for row in d2d):
            raise InstanceValidationError("demand_to_demand_time", f"must be a {n_i} x {n_i} matrix")
        if any(d2d[i][i] != 0 for i in range(n_i)):
            raise InstanceValidationError("demand_to_demand_time", "diagonal must be all zeros")

    # -- convenience -----------------------------------------------------

    @property
    def n_points(self) -> int:
        return len(self.demand_points)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_types(self) -> int:
        return len(self.ambulance_types)

    @property
    def total_fleet(self) -> int:
        return sum(a.fleet_size for a in self.ambulance_types)

    def demand(self, i: int, u: int, t: int) -> Fraction:
        return self.demand_points[i].demand[u][t]

    def total_demand(self, u: int | None = None) -> Fraction:
        """Total calls over all points and periods, optionally for one type."""
        types = range(self.n_types) if u is None else (u,)
        return sum((sum(p.demand[v], Fraction(0)) for p in self.demand_points for v in types), Fraction(0))

    def type_index(self, key: int | str) -> int:
        if isinstance(key, str):
            for a in self.ambulance_types:
                if a.label == key:
                    return a.id
            raise KeyError(f"unknown ambulance type label {key!r}")
        if not 0 <= key < self.n_types:
            raise KeyError(f"ambulance type index {key} out of range")
        return key

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "ambulance_types": [
                {
                    "id": a.id,
                    "label": a.label,
                    "fleet_size": a.fleet_size,
                    "response_standard": encode_json_number(a.response_standard),
                }
                for a in self.ambulance_types
            ],
            "demand_points": [
                {
                    "id": p.id,
                    "demand": [[encode_json_number(v) for v in row] for row in p.demand],
                    "service_time_demand": [[encode_json_number(v) for v in row] for row in p.service_time_demand],
                }
                for p in self.demand_points
            ],
            "sites": [{"id": s.id, "capacity": s.capacity} for s in self.sites],
            "num_periods": self.num_periods,
            "k_max": self.k_max,
            "travel_time": [[encode_json_number(v) for v in row] for row in self.travel_time],
            "demand_to_demand_time": [[encode_json_number(v) for v in row] for row in self.demand_to_demand_time],
        }
        if self.metadata:
            doc["metadata"] = self.metadata
        return doc

    @cached_property
    def fingerprint(self) -> str:
        """Short content hash of the model data (metadata excluded)."""
        doc = self.to_dict()
        doc.pop("metadata", None)
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# -- JSON I/O ------------------------------------------------------------


def dumps_instance(instance: Instance) -> str:
    """Serialize with one matrix row per line so files stay diffable."""
    doc = instance.to_dict()
    compact = dict(separators=(",", ":"), sort_keys=True)
    parts = []
    for key in list(INSTANCE_KEYS) + (["metadata"] if "metadata" in doc else []):
        value = doc[key]
        if isinstance(value, list) and value:
            rows = ",\n    ".join(json.dumps(v, **compact) for v in value)
            parts.append(f'  "{key}": [\n    {rows}\n  ]')
        else:
            parts.append(f'  "{key}": {json.dumps(value, **compact)}')
    return "{\n" + ",\n".join(parts) + "\n}\n"


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(instance), encoding="utf-8")


def _require(doc: dict, key: str, kind, where: str = ""):
    name = f"{where}{key}"
    if key not in doc:
        raise InstanceFormatError("missing key", field=name)
    value = doc[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise InstanceFormatError(f"expected an integer, got {value!r}", field=name)
    if kind is list and not isinstance(value, list):
        raise InstanceFormatError(f"expected an array, got {type(value).__name__}", field=name)
    if kind is dict and not isinstance(value, dict):
        raise InstanceFormatError(f"expected an object, got {type(value).__name__}", field=name)
    return value


def _matrix_field(doc: dict, key: str, where: str = "") -> list:
    rows = _require(doc, key, list, where)
    for r, row in enumerate(rows):
        if not isinstance(row, list):
            raise InstanceFormatError("expected an array of arrays", field=f"{where}{key}[{r}]")
    return rows


def instance_from_dict(doc: Any) -> Instance:
    """Build and validate an Instance from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be a JSON object")
    try:
        types = []
        for n, a in enumerate(_require(doc, "ambulance_types", list)):
            where = f"ambulance_types[{n}]."
            if not isinstance(a, dict):
                raise InstanceFormatError("expected an object", field=where[:-1])
            label = _require(a, "label", str, where)
            if not isinstance(label, str):
                raise InstanceFormatError("expected a string", field=f"{where}label")
            types.append(
                AmbulanceType(
                    id=_require(a, "id", int, where),
                    label=label,
                    fleet_size=_require(a, "fleet_size", int, where),
                    response_standard=to_fraction(_require(a, "response_standard", None, where), f"{where}response_standard"),
                )
            )
        points = []
        for n, p in enumerate(_require(doc, "demand_points", list)):
            where = f"demand_points[{n}]."
            if not isinstance(p, dict):
                raise InstanceFormatError("expected an object", field=where[:-1])
            points.append(
                DemandPoint(
                    id=_require(p, "id", int, where),
                    demand=_matrix_field(p, "demand", where),
                    service_time_demand=_matrix_field(p, "service_time_demand", where),
                )
            )
        sites = []
        for n, s in enumerate(_require(doc, "sites", list)):
            where = f"sites[{n}]."
            if not isinstance(s, dict):
                raise InstanceFormatError("expected an object", field=where[:-1])
            sites.append(Site(id=_require(s, "id", int, where), capacity=_require(s, "capacity", int, where)))
        metadata = doc.get("metadata", {})
        if not isinstance(metadata, dict):
            raise InstanceFormatError("expected an object", field="metadata")
        return Instance(
            demand_points=points,
            sites=sites,
            ambulance_types=types,
            num_periods=_require(doc, "num_periods", int),
            travel_time=_matrix_field(doc, "travel_time"),
            demand_to_demand_time=_matrix_field(doc, "demand_to_demand_time"),
            k_max=_require(doc, "k_max", int),
            metadata=metadata,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (InstanceFormatError, InstanceValidationError)):
            raise
        raise InstanceFormatError(str(exc)) from exc


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return instance_from_dict(doc)


def load_instance(path: str | Path) -> Instance:
    """Read and validate an instance JSON file.

    Raises
    ------
    FileNotFoundError
        The file does not exist.
    InstanceFormatError
        Malformed JSON (with line/column) or a missing/mistyped field.
    InstanceValidationError
        A data invariant is violated; ``err.field`` names the field.
    """
    return loads_instance(Path(path).read_text(encoding="utf-8"))


def make_instance(
    *,
    types: Sequence[tuple[str, int, Any]],
    demand: Sequence,
    service_time_demand: Sequence | None = None,
    capacities: Sequence[int],
    travel_time: Sequence[Sequence],
    demand_to_demand_time: Sequence[Sequence] | None = None,
    k_max: int = 1,
    metadata: dict | None = None,
) -> Instance:
    """Compact constructor used by tests and the generator.

    ``types`` is a list of ``(label, fleet_size, response_standard)``; ``demand`` and
    ``service_time_demand`` are nested ``[i][u][t]`` sequences.
    """
    n_i = len(demand)
    if service_time_demand is None:
        service_time_demand = [[[0] * len(row) for row in point] for point in demand]
    if demand_to_demand_time is None:
        demand_to_demand_time = [[0] * n_i for _ in range(n_i)]
    num_periods = len(demand[0][0]) if n_i and demand[0] else 1
    return Instance(
        demand_points=[DemandPoint(i, demand[i], service_time_demand[i]) for i in range(n_i)],
        sites=[Site(j, c) for j, c in enumerate(capacities)],
        ambulance_types=[AmbulanceType(u, label, p, s) for u, (label, p, s) in enumerate(types)],
        num_periods=num_periods,
        travel_time=travel_time,
        demand_to_demand_time=demand_to_demand_time,
        k_max=k_max,
        metadata=dict(metadata or {}),
    )
