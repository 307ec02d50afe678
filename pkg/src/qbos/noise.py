"""Noisy execution of mapped two-qubit circuits via 4x4 density matrices.

Error channels, matching the dominant NISQ error sources:

* depolarizing after every gate: rho -> (1-p) rho + p * I/4 for two-qubit
  gates, with the single-qubit analogue (replace the target qubit's state
  by I/2) after one-qubit gates;
* symmetric readout confusion applied to the final outcome distribution;
* a crosstalk penalty, an extra two-qubit depolarizing channel applied
  after entangling gates whenever another active pair sits closer than
  graph distance 2.

A global scale factor multiplies every error probability (clamped to 1),
so scale 0 reproduces the ideal simulator exactly and large scales drive
the state to the maximally mixed limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import CalibrationSnapshot, CouplingGraph, PairCalibration
from .game import GameSpec, build_ewl_circuit
from .gcm import MappingPlan
from .statevec import CircuitOp, ShotCounts, derive_seed, gate_library, sample_counts

CROSSTALK_DISTANCE = 2          # pairs closer than this interfere
DEFAULT_CROSSTALK_PENALTY = 0.05  # no published figure exists; tunable
ONE_QUBIT_ERROR_FRACTION = 0.1  # p_dep_1q default = fraction of the edge error


@dataclass(frozen=True)
class NoiseModel:
    """Error-strength configuration; per-pair figures default from calibration."""

    scale: float = 1.0
    p_dep_1q: float | None = None
    p_dep_2q: float | None = None
    readout_errors: tuple[float, float] | None = None
    crosstalk_penalty: float = DEFAULT_CROSSTALK_PENALTY

    def __post_init__(self):
        if not self.scale >= 0.0:
            raise ValueError("scale must be >= 0")
        for name in ("p_dep_1q", "p_dep_2q", "crosstalk_penalty"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v!r} outside [0, 1]")
        if self.readout_errors is not None:
            if any(not 0.0 <= r <= 1.0 for r in self.readout_errors):
                raise ValueError("readout errors outside [0, 1]")

    def resolved(self, pair_calib: PairCalibration):
        """Effective (p_1q, p_2q, p_crosstalk, (ro_a, ro_b)) after scaling."""
        p2_base = self.p_dep_2q if self.p_dep_2q is not None else pair_calib.two_qubit_error
        p1_base = (
            self.p_dep_1q
            if self.p_dep_1q is not None
            else ONE_QUBIT_ERROR_FRACTION * pair_calib.two_qubit_error
        )
        ro_base = (
            self.readout_errors
            if self.readout_errors is not None
            else pair_calib.readout_errors
        )
        clamp = lambda p: min(1.0, self.scale * p)
        return (
            clamp(p1_base),
            clamp(p2_base),
            clamp(self.crosstalk_penalty),
            (clamp(ro_base[0]), clamp(ro_base[1])),
        )


@dataclass(frozen=True)
class RunResult:
    circuit_index: int
    gamma: float
    counts: ShotCounts
    run_index: int


def _embed_1q(matrix: np.ndarray, qubit: int) -> np.ndarray:
    # basis index = 2*q1 + q0, so the qubit-0 factor sits on the right of kron
    if qubit == 0:
        return np.kron(np.eye(2), matrix)
    return np.kron(matrix, np.eye(2))


def _cnot_matrix(control: int, target: int) -> np.ndarray:
    m = np.zeros((4, 4))
    for col in range(4):
        row = col ^ (1 << target) if (col >> control) & 1 else col
        m[row, col] = 1.0
    return m


def _partial_trace(rho: np.ndarray, qubit: int) -> np.ndarray:
    r = rho.reshape(2, 2, 2, 2)  # (q1, q0, q1', q0')
    if qubit == 0:
        return np.einsum("abcb->ac", r)
    return np.einsum("abac->bc", r)


def depolarize_1q(rho: np.ndarray, qubit: int, p: float) -> np.ndarray:
    """Replace one qubit's state by I/2 with probability p."""
    if p == 0.0:
        return rho
    reduced = _partial_trace(rho, qubit)
    if qubit == 0:
        mixed = np.kron(reduced, np.eye(2) / 2.0)
    else:
        mixed = np.kron(np.eye(2) / 2.0, reduced)
    return (1.0 - p) * rho + p * mixed


def depolarize_2q(rho: np.ndarray, p: float) -> np.ndarray:
    """Mix towards I/4 with probability p."""
    if p == 0.0:
        return rho
    return (1.0 - p) * rho + p * np.eye(4) / 4.0


def confusion_matrix(readout_error: float) -> np.ndarray:
    """Symmetric per-qubit readout confusion (column-stochastic)."""
    r = readout_error
    return np.array([[1.0 - r, r], [r, 1.0 - r]])


def noisy_distribution(
    ops: list[CircuitOp],
    pair_calib: PairCalibration,
    model: NoiseModel,
    crosstalk_active: bool = False,
) -> np.ndarray:
    """Evolve the mapped circuit's 4x4 density matrix through the channels.

    Returns the 4-outcome distribution after readout confusion; it sums to 1
    within 1e-9 and equals the ideal distribution exactly when scale is 0.
    """
    p1, p2, p_xt, (ro_a, ro_b) = model.resolved(pair_calib)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    for op in ops:
        if op.name == "measure":
            continue
        if op.name == "cnot":
            u = _cnot_matrix(*op.qubits)
            rho = u @ rho @ u.conj().T
            rho = depolarize_2q(rho, p2)
            if crosstalk_active:
                rho = depolarize_2q(rho, p_xt)
        else:
            u = _embed_1q(gate_library(op.name, op.angle).matrix, op.qubits[0])
            rho = u @ rho @ u.conj().T
            rho = depolarize_1q(rho, op.qubits[0], p1)
    probs = np.real(np.diag(rho)).copy()
    probs = np.kron(confusion_matrix(ro_b), confusion_matrix(ro_a)) @ probs
    return np.clip(probs, 0.0, None)


def crosstalk_flags(plan: MappingPlan, graph: CouplingGraph) -> list[bool]:
    """Per-circuit flag: does any other active pair sit closer than distance 2?"""
    dist = {
        q: graph.distances_from(q) for pair in plan.assignments for q in pair
    }
    flags = []
    for i, pair in enumerate(plan.assignments):
        near = any(
            0 <= dist[q][o] < CROSSTALK_DISTANCE
            for j, other in enumerate(plan.assignments)
            if j != i
            for q in pair
            for o in other
        )
        flags.append(near)
    return flags


def simulate_job(
    plan: MappingPlan,
    spec: GameSpec,
    calib: CalibrationSnapshot,
    model: NoiseModel,
    shots: int,
    runs: int,
    seed: int,
) -> list[RunResult]:
    """Sample every (circuit, run) cell of a mapped sweep job.

    Circuit i runs the gamma_grid[i] circuit on the plan's i-th pair.  Each
    cell draws from a seed derived from (seed, circuit, run), so any
    parallel or reordered execution of the cells reproduces these counts.
    """
    if len(plan.assignments) != len(spec.gamma_grid):
        raise ValueError(
            f"plan has {len(plan.assignments)} pairs but the gamma grid has "
            f"{len(spec.gamma_grid)} points"
        )
    graph = calib.graph()
    flags = crosstalk_flags(plan, graph)
    distributions = []
    for i, gamma in enumerate(spec.gamma_grid):
        ops = build_ewl_circuit(gamma, spec.phi, spec.strategy_a, spec.strategy_b)
        pc = calib.pair(plan.assignments[i])
        distributions.append(noisy_distribution(ops, pc, model, flags[i]))
    results = []
    for run in range(runs):
        for i, gamma in enumerate(spec.gamma_grid):
            counts = sample_counts(distributions[i], shots, derive_seed(seed, i, run))
            results.append(RunResult(i, gamma, counts, run))
    return results
