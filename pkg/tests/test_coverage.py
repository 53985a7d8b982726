import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ambuloc.coverage import (
    build_coverage_sets,
    build_reliability_table,
    busy_fraction,
    dump_reliability_csv,
    reliability,
)
from ambuloc.instance import make_instance

from families import random_instance
from oracles import coverage_masks, q_ref


def one_point(service, k_max=1, fleet=3, times=(3,)):
    return make_instance(
        types=[("ALS", fleet, 8)],
        demand=[[[1]]],
        service_time_demand=[[[service]]],
        capacities=[1] * len(times),
        travel_time=[[t] for t in times],
        k_max=k_max,
    )


def test_tie_counts_as_covered():
    sets = build_coverage_sets(one_point(0, times=(8,)))
    assert sets.sites_covering(0, 0) == (0,)


def test_three_sites_threshold():
    sets = build_coverage_sets(one_point(0, times=(4, 8, 12)))
    assert sets.sites_covering(0, 0) == (0, 1)
    assert sets.points_covered_by(2, 0) == ()
    assert sets.points_covered_by(1, 0) == (0,)


def test_all_far_means_empty():
    sets = build_coverage_sets(one_point(0, times=(9, 30)))
    assert sets.sites_covering(0, 0) == ()


def test_point_in_own_neighborhood():
    inst = random_instance(11)
    sets = build_coverage_sets(inst)
    for i in range(inst.n_points):
        for u in range(inst.n_types):
            assert i in sets.point_neighborhood[i][u]


@pytest.mark.parametrize("seed", range(25))
def test_predicate_equivalence(seed):
    inst = random_instance(seed)
    sets = build_coverage_sets(inst)
    masks = coverage_masks(inst)
    for i in range(inst.n_points):
        for u in range(inst.n_types):
            assert sum(1 << j for j in sets.sites_covering(i, u)) == masks[i][u]


def test_shrinking_standard_never_adds():
    inst = random_instance(5)
    wide = build_coverage_sets(inst)
    doc = inst.to_dict()
    for t in doc["ambulance_types"]:
        t["response_standard"] = 5
    from ambuloc.instance import instance_from_dict

    narrow = build_coverage_sets(instance_from_dict(doc))
    for i in range(inst.n_points):
        for u in range(inst.n_types):
            assert set(narrow.sites_covering(i, u)) <= set(wide.sites_covering(i, u))
            assert set(narrow.point_neighborhood[i][u]) <= set(wide.point_neighborhood[i][u])


def test_busy_fraction_examples():
    inst = one_point(Fraction(1, 2), k_max=2)
    sets = build_coverage_sets(inst)
    assert busy_fraction(inst, sets, 0, 0, 1, 0) == Fraction(1, 2)
    assert busy_fraction(inst, sets, 0, 0, 2, 0) == Fraction(1, 4)
    heavy = one_point(Fraction(9, 5))
    assert busy_fraction(heavy, build_coverage_sets(heavy), 0, 0, 1, 0) == Fraction(9, 5)
    with pytest.raises(ValueError):
        busy_fraction(inst, sets, 0, 0, 3, 0)


@pytest.mark.parametrize(
    "b, k, q",
    [
        (Fraction(1, 2), 1, Fraction(1, 2)),
        (Fraction(1, 2), 2, Fraction(3, 4)),
        (Fraction(9, 5), 3, Fraction(0)),
        (Fraction(-1, 2), 2, Fraction(1)),
        (Fraction(0), 5, Fraction(1)),
        (Fraction(1), 1, Fraction(0)),
    ],
)
def test_reliability_examples(b, k, q):
    assert reliability(b, k) == q


def test_reliability_rejects_k0():
    with pytest.raises(ValueError):
        reliability(Fraction(1, 2), 0)


def test_hand_table_single_point():
    inst = one_point(Fraction(3, 5), k_max=2)
    table = build_reliability_table(inst, build_coverage_sets(inst))
    assert table.q(0, 0, 1, 0) == Fraction(2, 5)
    assert table.q(0, 0, 2, 0) == Fraction(91, 100)
    assert table.b(0, 0, 2, 0) == Fraction(3, 10)


def test_zero_service_demand_gives_q_one():
    inst = one_point(0, k_max=3)
    table = build_reliability_table(inst, build_coverage_sets(inst))
    assert all(q == 1 for *_, q in table.rows())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_table_bounds_and_b_monotone(seed):
    inst = random_instance(seed)
    table = build_reliability_table(inst, build_coverage_sets(inst))
    for i, u, k, t, b, q in table.rows():
        assert 0 <= q <= 1
        assert q == q_ref(b, k)
        if k > 1 and b > 0:
            assert b < table.b(i, u, k - 1, t)


def test_reliability_csv(tmp_path):
    inst = one_point(Fraction(3, 5), k_max=2)
    table = build_reliability_table(inst, build_coverage_sets(inst))
    p = tmp_path / "r.csv"
    dump_reliability_csv(table, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "i,u,k,t,b,q"
    assert len(lines) == 3
    assert lines[2].endswith(",91/100")
