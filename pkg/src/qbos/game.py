"""Classical and quantum Battle of the Sexes model.

The classical game is a 2x2 bimatrix coordination game.  Alice chooses a
row, Bob a column; the default matrix pays (3,2) on (Opera, Opera), (2,3)
on (TV, TV) and (0,0) on the miscoordinated outcomes.

The quantized game prepares a partially entangled two-qubit state
cos(gamma/2)|00> + sin(gamma/2)|11> with an Ry(gamma), Rz(phi), CNOT
sequence, lets each player apply a local single-qubit strategy gate, and
maps computational-basis measurement outcomes to payoffs.  Alice owns
qubit 0, Bob qubit 1; outcome labels are written qubit-1-first, so label
"01" means Bob read 0 and Alice read 1.

Two families of closed-form payoff curves are provided.  The 'corrected'
variant is the exact amplitude algebra of the circuit above.  The 'paper'
variant is a legacy set of published curves for the default matrix that
differs in one place: Alice's curve for the Hadamard strategy carries a
factor-2 typo inside the bracket and exceeds the maximum payoff 3 for
large gamma.  Both are kept so the discrepancy stays testable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import statevec
from .statevec import CircuitOp, probabilities, run_circuit

GAMMA_POINTS_DEFAULT = 31


@dataclass(frozen=True)
class PayoffMatrix:
    """2x2 grid of (alice, bob) payoffs, row = Alice's move, column = Bob's."""

    cells: tuple[tuple[tuple[float, float], tuple[float, float]],
                 tuple[tuple[float, float], tuple[float, float]]]

    def __post_init__(self):
        for i in (0, 1):
            for j in (0, 1):
                cell = self.cells[i][j]
                if len(cell) != 2 or not all(math.isfinite(v) for v in cell):
                    raise ValueError(f"cell ({i},{j}) must hold two finite payoffs")

    @classmethod
    def battle_of_sexes(cls) -> "PayoffMatrix":
        return cls((((3.0, 2.0), (0.0, 0.0)), ((0.0, 0.0), (2.0, 3.0))))

    @classmethod
    def identity_coordination(cls) -> "PayoffMatrix":
        return cls((((1.0, 1.0), (0.0, 0.0)), ((0.0, 0.0), (1.0, 1.0))))

    def alice(self, row: int, col: int) -> float:
        return self.cells[row][col][0]

    def bob(self, row: int, col: int) -> float:
        return self.cells[row][col][1]

    def swapped_roles(self) -> "PayoffMatrix":
        """Swap the two players' payoffs in every cell and mirror the grid."""
        c = self.cells
        return PayoffMatrix(tuple(
            tuple((c[j][i][1], c[j][i][0]) for j in (0, 1)) for i in (0, 1)
        ))

    def outcome_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-outcome payoff weights in label order 00, 01, 10, 11.

        Outcome bit layout: label = (bob_bit, alice_bit), so label "01" maps
        to matrix cell [row=1][col=0].
        """
        order = [(0, 0), (1, 0), (0, 1), (1, 1)]  # (alice_row, bob_col) per label
        wa = np.array([self.alice(r, c) for r, c in order])
        wb = np.array([self.bob(r, c) for r, c in order])
        return wa, wb


@dataclass(frozen=True)
class Strategy:
    """A local single-qubit strategy: identity, Hadamard, or an Ry rotation."""

    kind: str                  # 'I', 'H' or 'RY'
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in ("I", "H", "RY"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "RY":
            if self.angle is None or not 0.0 <= self.angle < 2 * math.pi:
                raise ValueError("RY strategy needs an angle in [0, 2*pi)")
        elif self.angle is not None:
            raise ValueError(f"strategy {self.kind} takes no angle")

    @property
    def label(self) -> str:
        if self.kind != "RY":
            return self.kind
        if abs(self.angle - math.pi / 4) < 1e-12:
            return "RY(pi/4)"
        if abs(self.angle - math.pi) < 1e-12:
            return "RY(pi)"
        return f"RY({self.angle:.6g})"

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        t = text.strip()
        if t == "I":
            return cls("I")
        if t == "H":
            return cls("H")
        m = re.fullmatch(r"RY\((.+)\)", t, flags=re.IGNORECASE)
        if m:
            expr = m.group(1).strip().lower()
            if expr == "pi":
                return cls("RY", math.pi)
            pm = re.fullmatch(r"pi\s*/\s*(\d+)", expr)
            if pm:
                return cls("RY", math.pi / int(pm.group(1)))
            return cls("RY", float(expr))
        raise ValueError(f"cannot parse strategy {text!r}")

    def gate_op(self, qubit: int) -> CircuitOp:
        if self.kind == "I":
            return CircuitOp("identity", (qubit,))
        if self.kind == "H":
            return CircuitOp("hadamard", (qubit,))
        return CircuitOp("ry", (qubit,), self.angle)


STRATEGY_I = Strategy("I")
STRATEGY_H = Strategy("H")
STRATEGY_RY_PI_4 = Strategy("RY", math.pi / 4)
STRATEGY_RY_PI = Strategy("RY", math.pi)

#: The four strategies evaluated in every experiment, in canonical order.
CANONICAL_STRATEGIES = (STRATEGY_I, STRATEGY_H, STRATEGY_RY_PI_4, STRATEGY_RY_PI)


def default_gamma_grid(steps: int = GAMMA_POINTS_DEFAULT) -> tuple[float, ...]:
    """Uniform entanglement-angle grid over [0, pi] including both endpoints."""
    if steps < 2:
        raise ValueError("gamma grid needs at least 2 points")
    return tuple(np.linspace(0.0, math.pi, steps).tolist())


@dataclass(frozen=True)
class GameSpec:
    """A full experiment configuration: matrix, gamma grid and strategy pair."""

    payoff: PayoffMatrix = field(default_factory=PayoffMatrix.battle_of_sexes)
    gamma_grid: tuple[float, ...] = field(default_factory=default_gamma_grid)
    strategy_a: Strategy = STRATEGY_I
    strategy_b: Strategy = STRATEGY_I
    phi: float = 0.0

    def __post_init__(self):
        g = tuple(float(x) for x in self.gamma_grid)
        object.__setattr__(self, "gamma_grid", g)
        if len(g) < 1 or g[0] < -1e-12 or g[-1] > math.pi + 1e-12:
            raise ValueError("gamma values must lie in [0, pi]")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ValueError("gamma grid must be strictly increasing")


@dataclass(frozen=True)
class MixedEquilibrium:
    p_alice: float          # probability Alice plays row 0
    q_bob: float            # probability Bob plays column 0
    e_a: float
    e_b: float
    coordination_prob: float


def classical_mixed_equilibrium(payoff: PayoffMatrix) -> MixedEquilibrium:
    """Solve the two indifference equations for an interior mixed equilibrium.

    Alice's mixing probability p makes Bob indifferent between his columns;
    Bob's q makes Alice indifferent between her rows.  Degenerate matrices
    (no interior solution) raise a ValueError naming the failing equation.
    """
    a = [[payoff.alice(i, j) for j in (0, 1)] for i in (0, 1)]
    b = [[payoff.bob(i, j) for j in (0, 1)] for i in (0, 1)]

    denom_b = b[0][0] - b[0][1] - b[1][0] + b[1][1]
    if abs(denom_b) < 1e-15:
        raise ValueError("Bob's indifference equation is degenerate (zero determinant)")
    p = (b[1][1] - b[1][0]) / denom_b
    if not 0.0 < p < 1.0:
        raise ValueError(
            f"Bob's indifference equation has no interior solution (p = {p:.4g})"
        )

    denom_a = a[0][0] - a[0][1] - a[1][0] + a[1][1]
    if abs(denom_a) < 1e-15:
        raise ValueError("Alice's indifference equation is degenerate (zero determinant)")
    q = (a[1][1] - a[0][1]) / denom_a
    if not 0.0 < q < 1.0:
        raise ValueError(
            f"Alice's indifference equation has no interior solution (q = {q:.4g})"
        )

    probs = ((p * q, p * (1 - q)), ((1 - p) * q, (1 - p) * (1 - q)))
    e_a = sum(probs[i][j] * a[i][j] for i in (0, 1) for j in (0, 1))
    e_b = sum(probs[i][j] * b[i][j] for i in (0, 1) for j in (0, 1))
    coordination = p * q + (1 - p) * (1 - q)
    return MixedEquilibrium(p, q, e_a, e_b, coordination)


def build_ewl_circuit(gamma: float, phi: float, sa: Strategy, sb: Strategy) -> list[CircuitOp]:
    """Entangle with Ry(gamma), Rz(phi), CNOT; then apply both strategies and measure."""
    if not -1e-12 <= gamma <= math.pi + 1e-12:
        raise ValueError(f"gamma = {gamma!r} outside [0, pi]")
    return [
        CircuitOp("ry", (0,), gamma),
        CircuitOp("rz", (0,), phi),
        CircuitOp("cnot", (0, 1)),
        sa.gate_op(0),
        sb.gate_op(1),
        CircuitOp("measure", (0,)),
        CircuitOp("measure", (1,)),
    ]


def entangled_state(gamma: float, imag_phase: bool = False) -> statevec.StateVector:
    """The prepared two-qubit state, optionally with the +i phase on |11>.

    The circuit produces real amplitudes cos(gamma/2)|00> + sin(gamma/2)|11>;
    the imag_phase form cos|00> + i sin|11> is available for comparison but
    is not used by any validation path (the closed-form payoff curves match
    the real-amplitude state only).
    """
    amps = np.zeros(4, dtype=complex)
    amps[0] = math.cos(gamma / 2)
    amps[3] = (1j if imag_phase else 1.0) * math.sin(gamma / 2)
    return statevec.StateVector(amps)


def ideal_outcome_distribution(spec: GameSpec, gamma: float) -> tuple[float, float, float, float]:
    """Exact outcome probabilities (p00, p01, p10, p11) from the statevector engine."""
    lo, hi = spec.gamma_grid[0], spec.gamma_grid[-1]
    if not lo - 1e-12 <= gamma <= hi + 1e-12:
        raise ValueError(f"gamma = {gamma!r} outside grid range [{lo}, {hi}]")
    ops = build_ewl_circuit(gamma, spec.phi, spec.strategy_a, spec.strategy_b)
    probs = probabilities(run_circuit(ops, num_qubits=2))
    return tuple(float(p) for p in probs)


def expected_payoffs(probs, payoff: PayoffMatrix) -> tuple[float, float]:
    """Expected (alice, bob) payoff of a 4-outcome distribution."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (4,):
        raise ValueError("expected a 4-outcome distribution")
    if abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValueError("distribution must sum to 1")
    wa, wb = payoff.outcome_weights()
    return float(p @ wa), float(p @ wb)


# Exact amplitude constants for the RY(pi/4) curves; the published decimals
# 0.853 / 0.146 are truncations of these.
_RY4_COS2 = math.cos(math.pi / 8) ** 2
_RY4_SIN2 = math.sin(math.pi / 8) ** 2


def _closed_form_distribution(strategy: Strategy, gamma: float) -> np.ndarray:
    """Outcome distribution for a symmetric strategy pair, by hand algebra."""
    c, s = math.cos(gamma / 2), math.sin(gamma / 2)
    if strategy.kind == "I":
        return np.array([c * c, 0.0, 0.0, s * s])
    if strategy.kind == "H":
        return np.array([(c + s) ** 2, (c - s) ** 2, (c - s) ** 2, (c + s) ** 2]) / 4.0
    # RY(theta) on both qubits of c|00> + s|11>
    a2 = math.cos(strategy.angle / 2) ** 2
    b2 = math.sin(strategy.angle / 2) ** 2
    ab = math.cos(strategy.angle / 2) * math.sin(strategy.angle / 2)
    p00 = (a2 * c + b2 * s) ** 2
    p11 = (b2 * c + a2 * s) ** 2
    p01 = (ab * (c - s)) ** 2
    return np.array([p00, p01, p01, p11])


def analytical_payoffs(
    strategy: Strategy,
    gamma: float,
    variant: str = "corrected",
    payoff: PayoffMatrix | None = None,
) -> tuple[float, float]:
    """Closed-form (e_a, e_b) when both players use the same strategy.

    variant='corrected' evaluates the exact circuit algebra against the given
    payoff matrix.  variant='paper' reproduces the legacy published curves for
    the default matrix verbatim, including the over-3 Hadamard curve for
    Alice; it does not accept a custom matrix.
    """
    if strategy.kind == "RY" and not 0.0 <= strategy.angle < 2 * math.pi:
        raise ValueError(f"unsupported strategy angle {strategy.angle!r}")
    if variant not in ("paper", "corrected"):
        raise ValueError(f"unknown variant {variant!r}")
    c, s = math.cos(gamma / 2), math.sin(gamma / 2)

    if variant == "paper":
        if payoff is not None and payoff != PayoffMatrix.battle_of_sexes():
            raise ValueError("the 'paper' variant is defined for the default matrix only")
        if strategy.kind == "I":
            return 3 * c * c + 2 * s * s, 2 * c * c + 3 * s * s
        if strategy.kind == "H":
            return 1.25 * (c + 2 * s) ** 2, 1.25 * (c + s) ** 2
        if abs(strategy.angle - math.pi) < 1e-12:
            return 2 * c * c + 3 * s * s, 3 * c * c + 2 * s * s
        if abs(strategy.angle - math.pi / 4) < 1e-12:
            p00 = (_RY4_COS2 * c + _RY4_SIN2 * s) ** 2
            p11 = (_RY4_COS2 * s + _RY4_SIN2 * c) ** 2
            return 3 * p00 + 2 * p11, 2 * p00 + 3 * p11
        raise ValueError(
            f"no published curve for strategy {strategy.label}; use variant='corrected'"
        )

    matrix = payoff if payoff is not None else PayoffMatrix.battle_of_sexes()
    dist = _closed_form_distribution(strategy, gamma)
    wa, wb = matrix.outcome_weights()
    return float(dist @ wa), float(dist @ wb)


def advantage_percent(e_quantum: float, e_classical: float) -> float:
    """Percent improvement of a payoff over a positive baseline."""
    if e_classical <= 0:
        raise ValueError("baseline payoff must be positive")
    return 100.0 * (e_quantum - e_classical) / e_classical
