import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ambuloc.instance import (
    INSTANCE_KEYS,
    InstanceFormatError,
    InstanceValidationError,
    dumps_instance,
    load_instance,
    loads_instance,
    make_instance,
    save_instance,
)

from families import random_instance


def minimal_doc():
    return {
        "ambulance_types": [{"id": 0, "label": "ALS", "fleet_size": 1, "response_standard": 10}],
        "demand_points": [{"id": 0, "demand": [[5]], "service_time_demand": [[0.5]]}],
        "sites": [{"id": 0, "capacity": 2}],
        "num_periods": 1,
        "k_max": 1,
        "travel_time": [[3]],
        "demand_to_demand_time": [[0]],
    }


def write(tmp_path, doc, name="inst.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_minimal_file_loads(tmp_path):
    inst = load_instance(write(tmp_path, minimal_doc()))
    assert (inst.n_points, inst.n_sites, inst.n_types, inst.num_periods) == (1, 1, 1, 1)
    assert inst.demand_points[0].service_time_demand[0][0] == Fraction(1, 2)


def test_documented_keys():
    assert set(INSTANCE_KEYS) == {
        "ambulance_types", "demand_points", "sites", "num_periods", "k_max", "travel_time", "demand_to_demand_time",
    }


def test_negative_travel_time_names_field(tmp_path):
    doc = minimal_doc()
    doc["travel_time"] = [[-1]]
    with pytest.raises(InstanceValidationError) as err:
        load_instance(write(tmp_path, doc))
    assert err.value.field == "travel_time"


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d["ambulance_types"][0].update(fleet_size=0), "fleet_size"),
        (lambda d: d["ambulance_types"][0].update(response_standard=0), "response_standard"),
        (lambda d: d["sites"][0].update(capacity=0), "capacity"),
        (lambda d: d.update(num_periods=0), "num_periods"),
        (lambda d: d.update(k_max=2), "k_max"),
        (lambda d: d.update(k_max=0), "k_max"),
        (lambda d: d.update(demand_to_demand_time=[[1]]), "demand_to_demand_time"),
        (lambda d: d["demand_points"][0].update(demand=[[-1]]), "demand"),
        (lambda d: d["demand_points"][0].update(service_time_demand=[[-0.1]]), "service_time_demand"),
        (lambda d: d["demand_points"][0].update(demand=[[1, 2]]), "demand"),
        (lambda d: d.update(travel_time=[[1], [2]]), "travel_time"),
    ],
)
def test_each_invariant_rejected_with_named_field(tmp_path, mutate, field):
    doc = minimal_doc()
    mutate(doc)
    with pytest.raises(InstanceValidationError) as err:
        load_instance(write(tmp_path, doc))
    assert err.value.field == field


def test_duplicate_labels_rejected(tmp_path):
    doc = minimal_doc()
    doc["ambulance_types"].append({"id": 1, "label": "ALS", "fleet_size": 1, "response_standard": 8})
    doc["demand_points"][0]["demand"] = [[1], [1]]
    doc["demand_points"][0]["service_time_demand"] = [[0], [0]]
    with pytest.raises(InstanceValidationError) as err:
        load_instance(write(tmp_path, doc))
    assert err.value.field == "ambulance_types"


def test_malformed_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "sites": [\n  oops\n}')
    with pytest.raises(InstanceFormatError) as err:
        load_instance(p)
    assert err.value.line == 3


def test_missing_key_is_format_error(tmp_path):
    doc = minimal_doc()
    del doc["k_max"]
    with pytest.raises(InstanceFormatError) as err:
        load_instance(write(tmp_path, doc))
    assert err.value.field == "k_max"


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_instance("/nonexistent/instance.json")


def test_unwritable_path(tmp_path):
    inst = random_instance(1)
    with pytest.raises(OSError):
        save_instance(inst, tmp_path / "no" / "such" / "dir" / "x.json")


def test_rational_values_roundtrip_exactly(tmp_path):
    inst = make_instance(
        types=[("ALS", 1, Fraction(19, 2))],
        demand=[[[Fraction(1, 3)]]],
        service_time_demand=[[[Fraction(2, 7)]]],
        capacities=[1],
        travel_time=[[Fraction(1, 10)]],
    )
    p = tmp_path / "r.json"
    save_instance(inst, p)
    back = load_instance(p)
    assert back == inst
    assert back.demand_points[0].demand[0][0] == Fraction(1, 3)
    assert back.ambulance_types[0].response_standard == Fraction(19, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_save_load_roundtrip(tmp_path_factory, seed):
    inst = random_instance(seed)
    p = tmp_path_factory.mktemp("rt") / "i.json"
    save_instance(inst, p)
    back = load_instance(p)
    assert back == inst
    assert back.fingerprint == inst.fingerprint
    assert dumps_instance(back) == dumps_instance(inst)


def test_fingerprint_ignores_metadata_but_not_data():
    a = random_instance(3)
    doc = a.to_dict()
    doc["metadata"] = {"note": "x"}
    b = loads_instance(json.dumps(doc))
    assert a.fingerprint == b.fingerprint
    doc["k_max"] = 1 if a.k_max != 1 else doc["k_max"]
    doc["sites"][0]["capacity"] = 2 if a.sites[0].capacity == 1 else 1
    c = loads_instance(json.dumps(doc))
    assert c.fingerprint != a.fingerprint


def test_total_demand_and_type_lookup():
    inst = make_instance(
        types=[("ALS", 1, 10), ("BLS", 2, 8)],
        demand=[[[1, 2], [3, 4]], [[5, 6], [7, 8]]],
        capacities=[2],
        travel_time=[[1, 1]],
    )
    assert inst.total_demand() == 36
    assert inst.total_demand(0) == 14
    assert inst.type_index("BLS") == 1
    with pytest.raises(KeyError):
        inst.type_index("XYZ")
