"""Pair-selection tests, including an exhaustive oracle on small graphs."""

import itertools
import time

import pytest

from qbos.device import (
    CalibrationSnapshot,
    CouplingGraph,
    EdgeCalibration,
    QubitCalibration,
    heavy_hex_graph,
    synth_calibration,
)
from qbos.gcm import (
    InfeasibleMappingError,
    MappingPlan,
    load_plan,
    packed_plan,
    plan_score,
    refine_mapping,
    score_pair,
    select_pairs,
    verify_separation,
)


def flat_calibration(graph, two_qubit=1e-2, readout=2e-2, t1=300.0):
    qubits = tuple(QubitCalibration(i, readout, t1, t1 * 0.8) for i in range(graph.num_qubits))
    edges = tuple(EdgeCalibration(e, two_qubit) for e in graph.edges)
    return CalibrationSnapshot("test", qubits, edges)


def custom_calibration(graph, edge_errors, readouts=None, t1=300.0):
    readouts = readouts or {}
    qubits = tuple(
        QubitCalibration(i, readouts.get(i, 2e-2), t1, t1 * 0.8)
        for i in range(graph.num_qubits)
    )
    edges = tuple(
        EdgeCalibration(e, edge_errors.get(tuple(sorted(e)), 1e-2)) for e in graph.edges
    )
    return CalibrationSnapshot("test", qubits, edges)


def path_graph(n):
    return CouplingGraph(n, tuple((i, i + 1) for i in range(n - 1)))


# --- independent oracle: exhaustive subset search with Floyd-Warshall distances ----

def floyd_warshall(graph):
    n = graph.num_qubits
    inf = 10**9
    d = [[0 if i == j else inf for j in range(n)] for i in range(n)]
    for a, b in graph.edges:
        d[a][b] = d[b][a] = 1
    for m in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][m] + d[m][j] < d[i][j]:
                    d[i][j] = d[i][m] + d[m][j]
    return d


def exhaustive_optimum(graph, calib, k, min_sep, weights=(1.0, 0.5, 0.1)):
    """Minimum total score over every feasible k-subset of edges, or None."""
    d = floyd_warshall(graph)
    scores = {e: score_pair(e, calib, weights).score for e in graph.edges}

    def separated(e1, e2):
        return min(d[a][b] for a in e1 for b in e2) >= max(min_sep, 1)

    best = None
    for subset in itertools.combinations(sorted(graph.edges), k):
        if all(separated(e1, e2) for e1, e2 in itertools.combinations(subset, 2)):
            total = sum(scores[e] for e in subset)
            if best is None or total < best:
                best = total
    return best


# --- scoring -------------------------------------------------------------------

def test_score_zero_in_ideal_limit():
    g = path_graph(2)
    qubits = (QubitCalibration(0, 0.0, 1e12, 1e12), QubitCalibration(1, 0.0, 1e12, 1e12))
    cal = CalibrationSnapshot("t", qubits, (EdgeCalibration((0, 1), 0.0),))
    assert score_pair((0, 1), cal).score < 1e-9


def test_score_linear_in_two_qubit_error():
    g = path_graph(3)
    cal1 = custom_calibration(g, {(0, 1): 0.01, (1, 2): 0.01})
    cal2 = custom_calibration(g, {(0, 1): 0.02, (1, 2): 0.01})
    w = (1.0, 0.0, 0.0)
    assert score_pair((0, 1), cal2, w).score == pytest.approx(
        2 * score_pair((0, 1), cal1, w).score
    )


def test_score_orders_by_readout():
    g = CouplingGraph(4, ((0, 1), (2, 3)))
    cal = custom_calibration(g, {}, readouts={0: 0.01, 1: 0.01, 2: 0.04, 3: 0.04})
    assert score_pair((0, 1), cal).score < score_pair((2, 3), cal).score


def test_score_missing_edge_raises():
    g = path_graph(3)
    cal = flat_calibration(g)
    with pytest.raises(KeyError):
        score_pair((0, 2), cal)


# --- selection -----------------------------------------------------------------

def test_select_on_path_graph_matches_bruteforce():
    g = path_graph(7)
    cal = flat_calibration(g)
    plan = select_pairs(g, cal, k=2, min_separation=2)
    ok, violation = verify_separation(plan, g)
    assert ok, violation
    assert plan_score(plan, cal) == pytest.approx(exhaustive_optimum(g, cal, 2, 2))


def test_triangle_is_infeasible_for_two_pairs():
    g = CouplingGraph(3, ((0, 1), (0, 2), (1, 2)))
    cal = flat_calibration(g)
    with pytest.raises(InfeasibleMappingError) as exc:
        select_pairs(g, cal, k=2, min_separation=2)
    assert exc.value.achievable == 1


def test_heavy_hex_127_takes_31_pairs():
    g = heavy_hex_graph(6)
    cal = synth_calibration(g, seed=1, profile="realistic")
    t0 = time.perf_counter()
    plan = select_pairs(g, cal, k=31, min_separation=2)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    assert len(plan.assignments) == 31
    assert len({q for p in plan.assignments for q in p}) == 62
    ok, violation = verify_separation(plan, g)
    assert ok, violation


@pytest.mark.parametrize("seed", range(6))
def test_heavy_hex_feasible_across_calibrations(seed):
    g = heavy_hex_graph(6)
    cal = synth_calibration(g, seed=seed, profile="realistic")
    plan = select_pairs(g, cal, k=31, min_separation=2)
    assert verify_separation(plan, g)[0]


def test_selection_prefers_low_error_edges():
    g = path_graph(8)
    cheap = {(0, 1): 1e-3, (5, 6): 1e-3}
    cal = custom_calibration(g, cheap)
    plan = select_pairs(g, cal, k=2, min_separation=2)
    assert set(plan.assignments) == {(0, 1), (5, 6)}


def test_selection_deterministic():
    g = heavy_hex_graph(3)
    cal = synth_calibration(g, seed=4, profile="realistic")
    p1 = select_pairs(g, cal, k=5)
    p2 = select_pairs(g, cal, k=5)
    assert p1 == p2


def test_monotone_feasibility():
    g = heavy_hex_graph(2)
    cal = synth_calibration(g, seed=2, profile="realistic")
    k = 4
    select_pairs(g, cal, k=k, min_separation=2)  # feasible
    for smaller in range(1, k):
        plan = select_pairs(g, cal, k=smaller, min_separation=2)
        assert len(plan.assignments) == smaller


@pytest.mark.parametrize(
    "graph_factory,k",
    [
        (lambda: path_graph(5), 2),
        (lambda: path_graph(8), 2),
        (lambda: path_graph(8), 3),
        (lambda: CouplingGraph(6, ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0))), 2),
        (lambda: CouplingGraph(9, ((0, 1), (1, 2), (3, 4), (4, 5), (6, 7), (7, 8))), 3),
        (lambda: CouplingGraph(7, ((0, 1), (0, 2), (0, 3), (3, 4), (4, 5), (5, 6))), 2),
        (lambda: CouplingGraph(10, tuple((i, i + 1) for i in range(9))), 3),
    ],
)
def test_small_instances_within_10pct_of_optimum(graph_factory, k):
    g = graph_factory()
    assert len(g.edges) <= 10
    for seed in (0, 1, 2):
        cal = synth_calibration(g, seed=seed, profile="realistic")
        opt = exhaustive_optimum(g, cal, k, 2)
        if opt is None:
            with pytest.raises(InfeasibleMappingError):
                select_pairs(g, cal, k=k, min_separation=2)
            continue
        plan = select_pairs(g, cal, k=k, min_separation=2)
        assert plan_score(plan, cal) <= 1.10 * opt


# --- verification ----------------------------------------------------------------

def test_verify_accepts_selected_plan():
    g = heavy_hex_graph(2)
    cal = synth_calibration(g, seed=0)
    plan = select_pairs(g, cal, k=3)
    assert verify_separation(plan, g) == (True, None)


def test_verify_flags_adjacent_pairs():
    g = path_graph(5)
    plan = MappingPlan(((0, 1), (2, 3)), min_separation=2)
    ok, violation = verify_separation(plan, g)
    assert not ok
    assert "1" in violation and "2" in violation


def test_verify_single_pair_always_ok():
    g = path_graph(3)
    plan = MappingPlan(((0, 1),), min_separation=2)
    assert verify_separation(plan, g) == (True, None)


def test_plan_rejects_qubit_reuse():
    with pytest.raises(ValueError):
        MappingPlan(((0, 1), (1, 2)))


# --- refinement --------------------------------------------------------------------

def test_uniform_feedback_keeps_plan():
    g = heavy_hex_graph(2)
    cal = synth_calibration(g, seed=3, profile="realistic")
    plan = select_pairs(g, cal, k=3)
    feedback = {i: 0.1 for i in range(3)}
    assert refine_mapping(plan, feedback, cal, g) == plan


def test_outlier_circuit_is_reassigned():
    g = path_graph(10)
    # circuit on (6,7) is noisy and a strictly better unused edge (0,1) exists
    errors = {(0, 1): 1e-3, (3, 4): 5e-3, (6, 7): 5e-3}
    cal = custom_calibration(g, errors)
    plan = MappingPlan(((3, 4), (6, 7)), min_separation=2)
    feedback = {0: 0.05, 1: 0.5}
    refined = refine_mapping(plan, feedback, cal, g)
    assert refined.assignments[0] == (3, 4)
    assert refined.assignments[1] == (0, 1)
    assert plan_score(refined, cal) <= plan_score(plan, cal)


def test_refinement_never_increases_score():
    g = heavy_hex_graph(3)
    cal = synth_calibration(g, seed=8, profile="realistic")
    plan = select_pairs(g, cal, k=6)
    feedback = {i: 0.1 + (0.9 if i == 2 else 0.0) for i in range(6)}
    refined = refine_mapping(plan, feedback, cal, g)
    assert plan_score(refined, cal) <= plan_score(plan, cal)
    assert verify_separation(refined, g)[0]


def test_refinement_requires_full_feedback():
    g = path_graph(6)
    cal = flat_calibration(g)
    plan = MappingPlan(((0, 1), (3, 4)), min_separation=2)
    with pytest.raises(ValueError, match="missing"):
        refine_mapping(plan, {0: 0.1}, cal, g)


# --- serialization -------------------------------------------------------------------

def test_plan_round_trip(tmp_path):
    g = heavy_hex_graph(2)
    cal = synth_calibration(g, seed=6)
    plan = select_pairs(g, cal, k=3)
    path = tmp_path / "plan.json"
    plan.save(path)
    assert load_plan(path) == plan


def test_packed_plan_is_adjacent():
    g = heavy_hex_graph(6)
    plan = packed_plan(g, 31)
    assert len(plan.assignments) == 31
    assert plan.min_separation == 1
    ok, _ = verify_separation(
        MappingPlan(plan.assignments, min_separation=2), g
    )
    assert not ok  # crowded on purpose
