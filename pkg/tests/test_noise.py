"""Noise channel tests: trace/positivity, limits, a hand-computed fixture."""

import math

import numpy as np
import pytest

from qbos.device import heavy_hex_graph, synth_calibration
from qbos.game import (
    GameSpec,
    STRATEGY_H,
    STRATEGY_I,
    build_ewl_circuit,
    expected_payoffs,
    ideal_outcome_distribution,
    PayoffMatrix,
    analytical_payoffs,
)
from qbos.gcm import MappingPlan, packed_plan, select_pairs
from qbos.noise import (
    NoiseModel,
    confusion_matrix,
    crosstalk_flags,
    depolarize_1q,
    depolarize_2q,
    noisy_distribution,
    simulate_job,
)

BOS = PayoffMatrix.battle_of_sexes()


def spec_for(strategy, steps=31):
    from qbos.game import default_gamma_grid
    return GameSpec(strategy_a=strategy, strategy_b=strategy,
                    gamma_grid=default_gamma_grid(steps))


def fixture_calibration():
    g = heavy_hex_graph(6)
    return g, synth_calibration(g, seed=0, profile="uniform")


def pair_calib():
    g, cal = fixture_calibration()
    return cal.pair(g.edges[0])


# --- channel algebra ------------------------------------------------------------

def test_depolarize_2q_preserves_trace_and_positivity():
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = rho[3, 0] = 0.5
    out = depolarize_2q(rho, 0.3)
    assert abs(np.trace(out).real - 1.0) < 1e-10
    assert np.linalg.eigvalsh(out).min() >= -1e-10


def test_depolarize_1q_keeps_other_marginal():
    # Bell state: depolarizing qubit 0 must leave qubit 1's marginal at I/2
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = rho[3, 0] = 0.5
    out = depolarize_1q(rho, 0, 1.0)
    assert abs(np.trace(out).real - 1.0) < 1e-10
    np.testing.assert_allclose(np.diag(out).real, [0.25] * 4, atol=1e-12)


def test_confusion_matrix_is_column_stochastic():
    c = confusion_matrix(0.07)
    np.testing.assert_allclose(c.sum(axis=0), [1.0, 1.0], atol=1e-15)


def test_model_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        NoiseModel(p_dep_2q=1.5)
    with pytest.raises(ValueError):
        NoiseModel(scale=-1.0)
    with pytest.raises(ValueError):
        NoiseModel(readout_errors=(0.5, 2.0))


# --- distribution limits -----------------------------------------------------------

def test_zero_scale_equals_ideal():
    model = NoiseModel(scale=0.0)
    pc = pair_calib()
    spec = spec_for(STRATEGY_H)
    for gamma in (0.0, 0.9, math.pi / 2, math.pi):
        ops = build_ewl_circuit(gamma, 0.0, STRATEGY_H, STRATEGY_H)
        noisy = noisy_distribution(ops, pc, model, crosstalk_active=True)
        ideal = ideal_outcome_distribution(spec, gamma)
        np.testing.assert_allclose(noisy, ideal, atol=1e-12)


def test_saturated_depolarizing_is_uniform():
    model = NoiseModel(scale=1.0, p_dep_1q=0.0, p_dep_2q=1.0, readout_errors=(0.0, 0.0))
    ops = build_ewl_circuit(1.0, 0.0, STRATEGY_I, STRATEGY_I)
    dist = noisy_distribution(ops, pair_calib(), model)
    np.testing.assert_allclose(dist, [0.25] * 4, atol=1e-12)


def test_huge_scale_clamps_to_uniform():
    model = NoiseModel(scale=1e9)
    ops = build_ewl_circuit(0.7, 0.0, STRATEGY_I, STRATEGY_I)
    dist = noisy_distribution(ops, pair_calib(), model)
    np.testing.assert_allclose(dist, [0.25] * 4, atol=1e-9)


def test_hand_computed_two_qubit_depolarizing():
    # strategy I at gamma = pi/2, only two-qubit depolarizing p = 0.1:
    # p00 = p11 = 0.5*0.9 + 0.25*0.1 = 0.475, p01 = p10 = 0.025
    model = NoiseModel(scale=1.0, p_dep_1q=0.0, p_dep_2q=0.1, readout_errors=(0.0, 0.0))
    ops = build_ewl_circuit(math.pi / 2, 0.0, STRATEGY_I, STRATEGY_I)
    dist = noisy_distribution(ops, pair_calib(), model)
    np.testing.assert_allclose(dist, [0.475, 0.025, 0.025, 0.475], atol=1e-12)


def test_distribution_normalized_and_nonnegative():
    model = NoiseModel(scale=2.5)
    for gamma in (0.0, 1.1, 2.2, math.pi):
        ops = build_ewl_circuit(gamma, 0.0, STRATEGY_H, STRATEGY_H)
        dist = noisy_distribution(ops, pair_calib(), model, crosstalk_active=True)
        assert abs(dist.sum() - 1.0) <= 1e-9
        assert np.all(dist >= 0.0)


def test_density_matrix_stays_physical_through_channels():
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    rng = np.random.default_rng(5)
    from qbos.noise import _cnot_matrix, _embed_1q
    from qbos.statevec import gate_library
    for _ in range(50):
        angle = rng.uniform(0, 2 * math.pi)
        u = _embed_1q(gate_library("ry", angle).matrix, int(rng.integers(2)))
        rho = u @ rho @ u.conj().T
        rho = depolarize_1q(rho, int(rng.integers(2)), float(rng.uniform(0, 0.2)))
        u = _cnot_matrix(0, 1)
        rho = u @ rho @ u.conj().T
        rho = depolarize_2q(rho, float(rng.uniform(0, 0.2)))
        assert abs(np.trace(rho).real - 1.0) < 1e-10
        assert np.linalg.eigvalsh(rho).min() >= -1e-10


# --- crosstalk geometry ----------------------------------------------------------------

def test_gcm_plan_has_no_crosstalk():
    g = heavy_hex_graph(6)
    cal = synth_calibration(g, seed=1, profile="realistic")
    plan = select_pairs(g, cal, k=31, min_separation=2)
    assert crosstalk_flags(plan, g) == [False] * 31


def test_packed_plan_triggers_crosstalk():
    g = heavy_hex_graph(6)
    plan = packed_plan(g, 31)
    flags = crosstalk_flags(plan, g)
    assert sum(flags) >= 25  # nearly every crowded circuit interferes


def test_crosstalk_flag_detects_adjacency():
    from qbos.device import CouplingGraph
    g = CouplingGraph(7, tuple((i, i + 1) for i in range(6)))
    plan = MappingPlan(((0, 1), (2, 3)), min_separation=1)
    assert crosstalk_flags(plan, g) == [True, True]
    plan2 = MappingPlan(((0, 1), (3, 4)), min_separation=2)
    assert crosstalk_flags(plan2, g) == [False, False]


# --- job simulation ------------------------------------------------------------------

def test_simulate_job_shape_and_totals():
    g = heavy_hex_graph(6)
    cal = synth_calibration(g, seed=2, profile="realistic")
    plan = select_pairs(g, cal, k=31, min_separation=2)
    spec = spec_for(STRATEGY_I)
    results = simulate_job(plan, spec, cal, NoiseModel(), shots=2048, runs=5, seed=9)
    assert len(results) == 31 * 5
    assert all(r.counts.total_shots == 2048 for r in results)
    assert {r.run_index for r in results} == set(range(5))
    assert {r.circuit_index for r in results} == set(range(31))


def test_simulate_job_rejects_grid_mismatch():
    g = heavy_hex_graph(6)
    cal = synth_calibration(g, seed=2)
    plan = select_pairs(g, cal, k=5, min_separation=2)
    with pytest.raises(ValueError, match="gamma grid"):
        simulate_job(plan, spec_for(STRATEGY_I), cal, NoiseModel(), 100, 2, 0)


def test_simulate_job_deterministic():
    g = heavy_hex_graph(6)
    cal = synth_calibration(g, seed=3, profile="realistic")
    plan = select_pairs(g, cal, k=7, min_separation=2)
    spec = spec_for(STRATEGY_H, steps=7)
    a = simulate_job(plan, spec, cal, NoiseModel(), shots=512, runs=3, seed=123)
    b = simulate_job(plan, spec, cal, NoiseModel(), shots=512, runs=3, seed=123)
    assert a == b
    c = simulate_job(plan, spec, cal, NoiseModel(), shots=512, runs=3, seed=124)
    assert a != c


def rmse_vs_analytic(results, spec, strategy):
    """RMSE of run-mean payoffs against the exact corrected curves."""
    by_circuit = {}
    for r in results:
        by_circuit.setdefault(r.circuit_index, []).append(r)
    err_a, err_b = [], []
    for i, gamma in enumerate(spec.gamma_grid):
        eas, ebs = [], []
        for r in by_circuit[i]:
            ea, eb = expected_payoffs(r.counts.frequencies(), BOS)
            eas.append(ea)
            ebs.append(eb)
        ref_a, ref_b = analytical_payoffs(strategy, gamma, "corrected")
        err_a.append(np.mean(eas) - ref_a)
        err_b.append(np.mean(ebs) - ref_b)
    return math.sqrt(np.mean(np.square(err_a))), math.sqrt(np.mean(np.square(err_b)))


def test_zero_noise_payoffs_within_shot_noise():
    g = heavy_hex_graph(6)
    cal = synth_calibration(g, seed=4, profile="realistic")
    plan = select_pairs(g, cal, k=31, min_separation=2)
    spec = spec_for(STRATEGY_I)
    results = simulate_job(plan, spec, cal, NoiseModel(scale=0.0), 2048, 5, seed=11)
    ra, rb = rmse_vs_analytic(results, spec, STRATEGY_I)
    # binomial bound: payoff sigma <= 3/(2 sqrt(shots*runs)) per gamma point
    assert ra <= 3.0 / math.sqrt(2048 * 5)
    assert rb <= 3.0 / math.sqrt(2048 * 5)


def test_rmse_nondecreasing_in_scale():
    g = heavy_hex_graph(6)
    spec = spec_for(STRATEGY_H)
    scales = (0.0, 0.5, 1.0, 2.0)
    means = []
    for scale in scales:
        totals = []
        for seed in range(5):
            cal = synth_calibration(g, seed=seed, profile="uniform")
            plan = select_pairs(g, cal, k=31, min_separation=2)
            results = simulate_job(plan, spec, cal, NoiseModel(scale=scale),
                                   1024, 3, seed=seed)
            totals.append(sum(rmse_vs_analytic(results, spec, STRATEGY_H)))
        means.append(np.mean(totals))
    assert all(b >= a for a, b in zip(means, means[1:]))


def test_packed_plan_noisier_than_separated_plan():
    g = heavy_hex_graph(6)
    cal = synth_calibration(g, seed=6, profile="uniform")
    spec = spec_for(STRATEGY_I)
    gcm = select_pairs(g, cal, k=31, min_separation=2)
    crowded = packed_plan(g, 31)
    model = NoiseModel(scale=1.0)
    r_gcm = simulate_job(gcm, spec, cal, model, 2048, 5, seed=42)
    r_pack = simulate_job(crowded, spec, cal, model, 2048, 5, seed=42)
    assert sum(rmse_vs_analytic(r_pack, spec, STRATEGY_I)) > sum(
        rmse_vs_analytic(r_gcm, spec, STRATEGY_I)
    )
