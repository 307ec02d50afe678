"""Guided circuit mapping: pick k connected, mutually separated qubit pairs.

Each two-qubit circuit is pinned to one physical edge.  Pairs must keep a
minimum graph distance from each other (default 2, i.e. at least one idle
qubit between any two active pairs) so that neighbouring circuits do not
interfere.  Selection is greedy by calibration-derived score with a
swap-based local search; optimality is not claimed, but on small instances
the result is checked against exhaustive search in the test suite.

Plans serialize as JSON
``{"min_separation": s, "assignments": [{"circuit": i, "pair": [a, b]}]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .device import CalibrationSnapshot, CouplingGraph

DEFAULT_WEIGHTS = (1.0, 0.5, 0.1)  # two-qubit error, readout sum, inverse-T1 (us)
DEFAULT_MIN_SEPARATION = 2
MULTI_START_EDGE_LIMIT = 60  # below this, restart greedy from every forced first edge


class InfeasibleMappingError(ValueError):
    """Raised when no plan with the requested pair count exists."""

    def __init__(self, requested: int, achievable: int):
        super().__init__(
            f"cannot place {requested} pairs; best achievable here is {achievable}"
        )
        self.requested = requested
        self.achievable = achievable


@dataclass(frozen=True)
class PairScore:
    edge: tuple[int, int]
    score: float

    def __post_init__(self):
        if not self.score >= 0.0:
            raise ValueError(f"score for edge {self.edge} must be finite and >= 0")


@dataclass(frozen=True)
class MappingPlan:
    """Ordered circuit -> physical edge assignment with a separation guarantee."""

    assignments: tuple[tuple[int, int], ...]
    min_separation: int = DEFAULT_MIN_SEPARATION

    def __post_init__(self):
        object.__setattr__(
            self,
            "assignments",
            tuple((min(a, b), max(a, b)) for a, b in self.assignments),
        )
        if self.min_separation < 1:
            raise ValueError("min_separation must be >= 1")
        used = [q for pair in self.assignments for q in pair]
        if len(set(used)) != len(used):
            raise ValueError("assignments reuse a qubit")

    def to_json(self) -> dict:
        return {
            "min_separation": self.min_separation,
            "assignments": [
                {"circuit": i, "pair": list(pair)}
                for i, pair in enumerate(self.assignments)
            ],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json(cls, doc: dict) -> "MappingPlan":
        entries = sorted(doc["assignments"], key=lambda e: int(e["circuit"]))
        if [int(e["circuit"]) for e in entries] != list(range(len(entries))):
            raise ValueError("assignment circuit indices must be 0..k-1")
        pairs = tuple((int(e["pair"][0]), int(e["pair"][1])) for e in entries)
        return cls(pairs, int(doc["min_separation"]))


def load_plan(path) -> MappingPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return MappingPlan.from_json(json.load(fh))


def score_pair(edge, calib: CalibrationSnapshot, weights=DEFAULT_WEIGHTS) -> PairScore:
    """Weighted cost of running a circuit on one edge (lower is better)."""
    w_2q, w_ro, w_coh = weights
    pc = calib.pair(edge)
    score = (
        w_2q * pc.two_qubit_error
        + w_ro * (pc.readout_errors[0] + pc.readout_errors[1])
        + w_coh * (1.0 / pc.t1_us[0] + 1.0 / pc.t1_us[1])
    )
    key = (min(edge), max(edge))
    return PairScore(key, score)


def _distance_matrix(graph: CouplingGraph) -> list[list[int]]:
    return [graph.distances_from(q) for q in range(graph.num_qubits)]


def _pair_distance(dist, e1, e2) -> int:
    ds = [dist[a][b] for a in e1 for b in e2]
    if any(d < 0 for d in ds):
        return 10**9  # different components never interfere
    return min(ds)


def _compatible(dist, e1, e2, min_separation: int) -> bool:
    # distance 0 means a shared qubit, which is never allowed
    return _pair_distance(dist, e1, e2) >= max(min_separation, 1)


def select_pairs(
    graph: CouplingGraph,
    calib: CalibrationSnapshot,
    k: int,
    min_separation: int = DEFAULT_MIN_SEPARATION,
    weights=DEFAULT_WEIGHTS,
) -> MappingPlan:
    """Choose k separated edges minimizing total score.

    Greedy by ascending (score, edge) with a single-swap local search; the
    result is locally minimal under replacing any one chosen pair by any
    unused edge.  Deterministic: ties break on lexicographic edge order.
    Raises InfeasibleMappingError (with the best pair count this procedure
    can achieve) when k pairs cannot be placed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    dist = _distance_matrix(graph)
    ranked = sorted(
        (score_pair(e, calib, weights) for e in graph.edges),
        key=lambda ps: (ps.score, ps.edge),
    )

    def greedy(order) -> list[PairScore]:
        chosen: list[PairScore] = []
        for ps in order:
            if len(chosen) == k:
                break
            if all(_compatible(dist, ps.edge, c.edge, min_separation) for c in chosen):
                chosen.append(ps)
        return chosen

    # the pure score order can paint itself into a corner, so also restart
    # from each edge as a forced first pick (small graphs) and from plain
    # lexicographic order, keeping the largest then cheapest selection
    orders = [ranked, sorted(ranked, key=lambda ps: ps.edge)]
    if len(ranked) <= MULTI_START_EDGE_LIMIT:
        for i in range(len(ranked)):
            orders.append([ranked[i]] + ranked[:i] + ranked[i + 1:])

    def preference(sel: list[PairScore]):
        return (-len(sel), sum(ps.score for ps in sel),
                tuple(sorted(ps.edge for ps in sel)))

    chosen = min((greedy(order) for order in orders), key=preference)
    if len(chosen) < k:
        raise InfeasibleMappingError(k, len(chosen))

    # local search: swap any chosen pair for a cheaper unused edge
    improved = True
    while improved:
        improved = False
        order = sorted(range(k), key=lambda i: (-chosen[i].score, chosen[i].edge))
        for idx in order:
            current = chosen[idx]
            rest = chosen[:idx] + chosen[idx + 1:]
            for ps in ranked:
                if ps.score >= current.score:
                    break  # ranked is ascending; nothing cheaper remains
                if any(ps.edge == c.edge for c in rest):
                    continue
                if all(_compatible(dist, ps.edge, c.edge, min_separation) for c in rest):
                    chosen[idx] = ps
                    improved = True
                    break
            if improved:
                break

    ordered = sorted(chosen, key=lambda ps: (ps.score, ps.edge))
    return MappingPlan(tuple(ps.edge for ps in ordered), min_separation)


def verify_separation(plan: MappingPlan, graph: CouplingGraph) -> tuple[bool, str | None]:
    """Exhaustively re-check the plan's separation with independent BFS walks.

    Returns (True, None) or (False, description of the first violation).
    """
    from collections import deque

    adj = graph.adjacency()
    for pair in plan.assignments:
        for q in pair:
            if not 0 <= q < graph.num_qubits:
                return False, f"qubit {q} outside the graph"
        if tuple(sorted(pair)) not in graph.edges:
            return False, f"pair {pair} is not a coupled edge"

    def bfs_within(start: int, radius: int) -> dict[int, int]:
        seen = {start: 0}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            if seen[u] == radius:
                continue
            for v in adj[u]:
                if v not in seen:
                    seen[v] = seen[u] + 1
                    queue.append(v)
        return seen

    radius = plan.min_separation - 1  # anything reachable this close is too close
    for i, pi in enumerate(plan.assignments):
        for j, pj in enumerate(plan.assignments):
            if j <= i:
                continue
            for a in pi:
                near = bfs_within(a, radius)
                for b in pj:
                    if b in near:
                        return False, (
                            f"circuits {i} and {j}: qubits {a} and {b} are "
                            f"{near[b]} apart (< {plan.min_separation})"
                        )
    return True, None


def plan_score(plan: MappingPlan, calib: CalibrationSnapshot, weights=DEFAULT_WEIGHTS) -> float:
    return sum(score_pair(e, calib, weights).score for e in plan.assignments)


def refine_mapping(
    plan: MappingPlan,
    feedback: dict[int, float],
    calib: CalibrationSnapshot,
    graph: CouplingGraph,
    weights=DEFAULT_WEIGHTS,
) -> MappingPlan:
    """Reassign the worst-feedback circuits to better unused edges.

    Circuits whose observed error strictly exceeds the 90th percentile of the
    feedback values are candidates; each moves to the cheapest unused edge
    that keeps the whole plan feasible, and only if that edge scores strictly
    better than its current one.  With uniform feedback, or when no improving
    move exists, the plan is returned unchanged.
    """
    k = len(plan.assignments)
    missing = [i for i in range(k) if i not in feedback]
    if missing:
        raise ValueError(f"feedback missing for circuits {missing}")

    values = sorted(feedback.values())
    threshold = values[min(k - 1, int(0.9 * (k - 1)))] if k > 1 else values[0]
    worst = [i for i in range(k) if feedback[i] > threshold]
    if not worst:
        return plan
    worst.sort(key=lambda i: (-feedback[i], i))

    dist = _distance_matrix(graph)
    assignments = list(plan.assignments)
    used = set(assignments)
    candidates = sorted(
        (score_pair(e, calib, weights) for e in graph.edges),
        key=lambda ps: (ps.score, ps.edge),
    )
    changed = False
    for i in worst:
        current = score_pair(assignments[i], calib, weights)
        others = [p for j, p in enumerate(assignments) if j != i]
        for ps in candidates:
            if ps.score >= current.score:
                break
            if ps.edge in used:
                continue
            if all(_compatible(dist, ps.edge, o, plan.min_separation) for o in others):
                used.discard(assignments[i])
                assignments[i] = ps.edge
                used.add(ps.edge)
                changed = True
                break
    if not changed:
        return plan
    return MappingPlan(tuple(assignments), plan.min_separation)


def packed_plan(graph: CouplingGraph, k: int) -> MappingPlan:
    """A deliberately crowded baseline: disjoint pairs with no idle spacing.

    Greedy in lexicographic edge order, requiring only that qubits are not
    reused; neighbouring circuits typically sit directly next to each other.
    Useful as the no-separation reference when measuring what the separated
    mapping buys.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    chosen: list[tuple[int, int]] = []
    used: set[int] = set()
    for a, b in sorted(graph.edges):
        if len(chosen) == k:
            break
        if a in used or b in used:
            continue
        chosen.append((a, b))
        used.update((a, b))
    if len(chosen) < k:
        raise InfeasibleMappingError(k, len(chosen))
    return MappingPlan(tuple(chosen), min_separation=1)
