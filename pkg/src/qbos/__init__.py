"""Quantum Battle of the Sexes: exact simulation, noise-aware qubit-pair
mapping, noisy shot sampling and statistical validation."""

from .device import (
    CalibrationSnapshot,
    CouplingGraph,
    heavy_hex_graph,
    load_calibration,
    load_coupling_map,
    synth_calibration,
)
from .game import (
    CANONICAL_STRATEGIES,
    STRATEGY_H,
    STRATEGY_I,
    STRATEGY_RY_PI,
    STRATEGY_RY_PI_4,
    GameSpec,
    MixedEquilibrium,
    PayoffMatrix,
    Strategy,
    advantage_percent,
    analytical_payoffs,
    build_ewl_circuit,
    classical_mixed_equilibrium,
    default_gamma_grid,
    expected_payoffs,
    ideal_outcome_distribution,
)
from .gcm import (
    InfeasibleMappingError,
    MappingPlan,
    PairScore,
    packed_plan,
    refine_mapping,
    score_pair,
    select_pairs,
    verify_separation,
)
from .noise import NoiseModel, RunResult, noisy_distribution, simulate_job
from .statevec import (
    CircuitOp,
    Gate1Q,
    ShotCounts,
    StateVector,
    apply_1q,
    apply_cnot,
    gate_library,
    probabilities,
    run_circuit,
    sample_counts,
)
from .stats import (
    PayoffEstimate,
    ValidationReport,
    aggregate_runs,
    build_validation_report,
    payoffs_from_counts,
    propagate_count_error,
    relative_error_percent,
    rmse,
)

__version__ = "0.1.0"
