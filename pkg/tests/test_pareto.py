import random
from fractions import Fraction

import pytest

from ambuloc.instance import make_instance
from ambuloc.pareto import (
    ParetoFront,
    ParetoPoint,
    compute_eps_min,
    dedupe,
    filter_nondominated,
    front_header,
    knee_point,
    sweep,
    write_front_csv,
)
from ambuloc.solver import SolverConfig

from families import random_instance
from oracles import mask_oracle


def fleet_instance(fleets, caps):
    return make_instance(
        types=[(f"T{u}", p, 10) for u, p in enumerate(fleets)],
        demand=[[[1] for _ in fleets]],
        capacities=caps,
        travel_time=[[1] for _ in caps],
    )


def test_eps_min_dataset_scale():
    assert compute_eps_min(fleet_instance([7, 21], [2] * 30)) == 14


def test_eps_min_heterogeneous():
    assert compute_eps_min(fleet_instance([5], [3, 2, 1])) == 2


def test_eps_min_single_vehicle():
    assert compute_eps_min(fleet_instance([1], [4, 1, 2])) == 1


def test_eps_min_uniform_is_ceiling():
    for fleet in range(1, 12):
        for cap in (1, 2, 3):
            assert compute_eps_min(fleet_instance([fleet], [cap] * 20)) == -(-fleet // cap)


def quadratic_filter(points):
    kept = []
    for a in points:
        dominated = any(
            b[0] <= a[0] and b[1] >= a[1] and (b[0] < a[0] or b[1] > a[1]) for b in points
        )
        if not dominated:
            kept.append(a)
    return kept


def test_filter_examples():
    assert filter_nondominated([(5, 10), (6, 10)]) == [(5, 10)]
    assert filter_nondominated([(5, 10), (6, 12)]) == [(5, 10), (6, 12)]
    assert filter_nondominated([]) == []
    assert filter_nondominated([(3, 4), (3, 4)]) == [(3, 4), (3, 4)]


def test_filter_random_clouds():
    rng = random.Random(0)
    for _ in range(300):
        pts = [(rng.randint(0, 8), rng.randint(0, 8)) for _ in range(rng.randint(0, 25))]
        assert sorted(filter_nondominated(pts)) == sorted(quadratic_filter(pts))


def test_filter_accepts_objects():
    pts = [ParetoPoint(e, s, Fraction(c), None, "optimal") for e, s, c in [(1, 1, 3), (2, 2, 3), (3, 2, 5)]]
    kept = filter_nondominated(pts)
    assert [(p.stations_used, p.coverage_objective) for p in kept] == [(1, 3), (2, 5)]


def test_single_epsilon_front():
    inst = random_instance(3)
    front = sweep(inst, "deterministic", 2, 2)
    assert len(front.raw) == 1
    assert len(front.points) == 1
    assert front.points[0].stations_used <= 2


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("kind", ["deterministic", "probabilistic"])
def test_exact_sweep_matches_oracle(seed, kind):
    inst = random_instance(seed, max_sites=6)
    front = sweep(inst, kind, 0, inst.n_sites)
    for p in front.raw:
        assert p.status == "optimal"
        assert p.coverage_objective == mask_oracle(inst, kind, epsilon=p.epsilon)
        assert p.stations_used <= p.epsilon
    assert not front.monotonicity_violations()
    objs = [p.coverage_objective for p in front.points]
    stations = [p.stations_used for p in front.points]
    assert objs == sorted(set(objs)) and stations == sorted(set(stations))


def test_sweep_rejects_bad_range():
    with pytest.raises(ValueError):
        sweep(random_instance(1), "deterministic", 3, 2)


def test_heuristic_sweep_warm_start_and_parallel_agree_on_feasibility():
    inst = random_instance(17)
    seq = sweep(inst, "probabilistic", 0, 3, SolverConfig(method="heuristic"))
    par = sweep(inst, "deterministic", 0, 3, SolverConfig(jobs=2, warm_start=False))
    assert [p.epsilon for p in seq.raw] == [0, 1, 2, 3]
    assert [p.epsilon for p in par.raw] == [0, 1, 2, 3]
    assert all(p.ok for p in seq.raw + par.raw)


def test_failed_point_flagged_without_abort():
    inst = random_instance(4)
    # mandatory sites beyond the cap make small epsilons infeasible
    front = sweep(inst, "deterministic", 0, 2, mandatory_sites=[0])
    assert front.raw[0].status == "infeasible" and not front.raw[0].ok
    assert all(p.ok for p in front.raw[1:])
    assert front.failed == [front.raw[0]]


def test_knee():
    pts = [ParetoPoint(s, s, Fraction(c), None, "optimal") for s, c in [(1, 10), (2, 18), (3, 20), (4, 21)]]
    front = ParetoFront(pts, "m", "f", pts)
    assert knee_point(front, 5).stations_used == 2
    assert knee_point(front, 1).stations_used == 4
    assert knee_point(front, 100).stations_used == 1
    assert knee_point(ParetoFront([], "m", "f"), 1) is None


def test_dedupe_keeps_smallest_epsilon():
    a = ParetoPoint(5, 3, Fraction(7), None, "optimal")
    b = ParetoPoint(4, 3, Fraction(7), None, "optimal")
    assert dedupe([a, b]) == [b]


def test_front_csv_header(tmp_path):
    inst = make_instance(
        types=[("ALS", 1, 10), ("BLS", 1, 8)], demand=[[[1], [1]]], capacities=[2], travel_time=[[1]]
    )
    front = sweep(inst, "deterministic", 1, 1)
    p = tmp_path / "f.csv"
    write_front_csv(front.points, inst, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "epsilon,stations_used,objective,coverage_rate_total,coverage_rate_ALS,coverage_rate_BLS,status"
    assert lines[1] == "1,1,2.000000,100.0000,100.0000,100.0000,optimal"
    assert front_header(inst)[-1] == "status"
