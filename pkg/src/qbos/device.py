"""Target-processor model: coupling graph, calibration data, file I/O.

The coupling-map file is JSON ``{"num_qubits": N, "edges": [[a, b], ...]}``.
The calibration file is JSON::

    {
      "timestamp": "...",
      "qubits": [{"id": 0, "readout_error": ..., "t1_us": ..., "t2_us": ...}, ...],
      "edges":  [{"pair": [a, b], "two_qubit_error": ...}, ...]
    }
"""

from __future__ import annotations

import datetime
import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

# realistic synthesis ranges; two-qubit errors start at the best figure
# reported for current heavy-hex processors (~2.5e-3)
TWO_QUBIT_ERROR_RANGE = (2.5e-3, 3.0e-2)
READOUT_ERROR_RANGE = (5.0e-3, 5.0e-2)
T1_RANGE_US = (150.0, 450.0)

UNIFORM_TWO_QUBIT_ERROR = 1.0e-2
UNIFORM_READOUT_ERROR = 2.0e-2
UNIFORM_T1_US = 286.0
UNIFORM_T2_US = 226.0


@dataclass(frozen=True)
class CouplingGraph:
    """Undirected connectivity graph over qubit indices."""

    num_qubits: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("graph needs at least one qubit")
        canon = []
        for e in self.edges:
            a, b = int(e[0]), int(e[1])
            if a == b:
                raise ValueError(f"self-loop on qubit {a}")
            if not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise ValueError(f"edge ({a},{b}) out of range")
            canon.append((min(a, b), max(a, b)))
        if len(set(canon)) != len(canon):
            dup = sorted({e for e in canon if canon.count(e) > 1})
            raise ValueError(f"duplicate edges {dup}")
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    def adjacency(self) -> list[list[int]]:
        adj = [[] for _ in range(self.num_qubits)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def distances_from(self, start: int) -> list[int]:
        """BFS hop distances from one qubit; unreachable nodes get -1."""
        adj = self.adjacency()
        dist = [-1] * self.num_qubits
        dist[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def is_connected(self) -> bool:
        return all(d >= 0 for d in self.distances_from(0))

    def max_degree(self) -> int:
        return max(len(nbrs) for nbrs in self.adjacency())

    def to_json(self) -> dict:
        return {"num_qubits": self.num_qubits, "edges": [list(e) for e in self.edges]}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")


def heavy_hex_graph(distance: int) -> CouplingGraph:
    """Generate a heavy-hex lattice with `distance` rows of hexagon cells.

    Rows of qubits (length 2*distance + 3) are joined by bridge qubits every
    four columns, alternating offset per row, which caps the degree at 3.
    For even distances the two corner qubits not adjacent to any bridge are
    trimmed; distance 6 then reproduces the 127-qubit processor layout.
    """
    if distance < 1:
        raise ValueError("distance must be >= 1")
    d = distance
    cols = 2 * d + 3
    trim = d % 2 == 0
    node_of: dict[tuple, int] = {}
    counter = 0

    def row_columns(r: int) -> range | list[int]:
        if trim and r == 0:
            return range(cols - 1)
        if trim and r == d:
            return range(1, cols)
        return range(cols)

    for r in range(d + 1):
        for c in row_columns(r):
            node_of[("q", r, c)] = counter
            counter += 1
        if r < d:
            offset = 0 if r % 2 == 0 else 2
            for c in range(offset, cols, 4):
                node_of[("b", r, c)] = counter
                counter += 1

    edges = []
    for r in range(d + 1):
        cs = list(row_columns(r))
        for c0, c1 in zip(cs, cs[1:]):
            edges.append((node_of[("q", r, c0)], node_of[("q", r, c1)]))
    for (kind, r, c), idx in node_of.items():
        if kind == "b":
            edges.append((node_of[("q", r, c)], idx))
            edges.append((idx, node_of[("q", r + 1, c)]))
    return CouplingGraph(counter, tuple(edges))


def load_coupling_map(path) -> CouplingGraph:
    """Load and validate a coupling-map JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: line {err.lineno}: {err.msg}") from err
    try:
        return CouplingGraph(int(doc["num_qubits"]), tuple(tuple(e) for e in doc["edges"]))
    except (KeyError, TypeError, IndexError) as err:
        raise ValueError(f"{path}: malformed coupling map ({err!r})") from err


@dataclass(frozen=True)
class QubitCalibration:
    id: int
    readout_error: float
    t1_us: float
    t2_us: float

    def __post_init__(self):
        if not 0.0 <= self.readout_error <= 1.0:
            raise ValueError(f"qubit {self.id}: readout_error outside [0,1]")
        if self.t1_us <= 0 or self.t2_us <= 0:
            raise ValueError(f"qubit {self.id}: coherence times must be positive")


@dataclass(frozen=True)
class EdgeCalibration:
    pair: tuple[int, int]
    two_qubit_error: float

    def __post_init__(self):
        a, b = self.pair
        object.__setattr__(self, "pair", (min(a, b), max(a, b)))
        if not 0.0 <= self.two_qubit_error <= 1.0:
            raise ValueError(f"edge {self.pair}: two_qubit_error outside [0,1]")


@dataclass(frozen=True)
class PairCalibration:
    """Calibration figures for one connected qubit pair."""

    two_qubit_error: float
    readout_errors: tuple[float, float]
    t1_us: tuple[float, float]
    t2_us: tuple[float, float]


@dataclass(frozen=True)
class CalibrationSnapshot:
    timestamp: str
    qubits: tuple[QubitCalibration, ...]
    edges: tuple[EdgeCalibration, ...]

    def __post_init__(self):
        ids = [q.id for q in self.qubits]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate qubit calibration entries")
        pairs = [e.pair for e in self.edges]
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate edge calibration entries")

    def qubit(self, index: int) -> QubitCalibration:
        for q in self.qubits:
            if q.id == index:
                return q
        raise KeyError(f"no calibration for qubit {index}")

    def edge(self, pair) -> EdgeCalibration:
        key = (min(pair), max(pair))
        for e in self.edges:
            if e.pair == key:
                return e
        raise KeyError(f"no calibration for edge {key}")

    def pair(self, edge) -> PairCalibration:
        a, b = min(edge), max(edge)
        ec = self.edge((a, b))
        qa, qb = self.qubit(a), self.qubit(b)
        return PairCalibration(
            two_qubit_error=ec.two_qubit_error,
            readout_errors=(qa.readout_error, qb.readout_error),
            t1_us=(qa.t1_us, qb.t1_us),
            t2_us=(qa.t2_us, qb.t2_us),
        )

    def covers(self, graph: CouplingGraph) -> bool:
        have = {e.pair for e in self.edges}
        return all(e in have for e in graph.edges) and len(self.qubits) >= graph.num_qubits

    def graph(self) -> CouplingGraph:
        """The coupling graph implied by the calibrated edges."""
        n = max(q.id for q in self.qubits) + 1
        return CouplingGraph(n, tuple(e.pair for e in self.edges))

    def to_json(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "qubits": [
                {"id": q.id, "readout_error": q.readout_error,
                 "t1_us": q.t1_us, "t2_us": q.t2_us}
                for q in self.qubits
            ],
            "edges": [
                {"pair": list(e.pair), "two_qubit_error": e.two_qubit_error}
                for e in self.edges
            ],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json(cls, doc: dict) -> "CalibrationSnapshot":
        qubits = tuple(
            QubitCalibration(int(q["id"]), float(q["readout_error"]),
                             float(q["t1_us"]), float(q["t2_us"]))
            for q in doc["qubits"]
        )
        edges = tuple(
            EdgeCalibration((int(e["pair"][0]), int(e["pair"][1])),
                            float(e["two_qubit_error"]))
            for e in doc["edges"]
        )
        return cls(str(doc["timestamp"]), qubits, edges)


def load_calibration(path) -> CalibrationSnapshot:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: line {err.lineno}: {err.msg}") from err
    try:
        return CalibrationSnapshot.from_json(doc)
    except (KeyError, TypeError, IndexError) as err:
        raise ValueError(f"{path}: malformed calibration ({err!r})") from err


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def synth_calibration(graph: CouplingGraph, seed: int, profile: str = "realistic") -> CalibrationSnapshot:
    """Synthesize a deterministic calibration snapshot for a coupling graph.

    'uniform' gives every qubit and edge the same figures; 'realistic' draws
    log-uniform error rates (positively skewed, like live backends) from the
    module-level ranges.
    """
    if profile not in ("uniform", "realistic"):
        raise ValueError(f"unknown profile {profile!r}")
    stamp = (
        datetime.datetime(2025, 6, 1, tzinfo=datetime.timezone.utc)
        + datetime.timedelta(hours=seed % 8760)
    ).isoformat()

    if profile == "uniform":
        qubits = tuple(
            QubitCalibration(i, UNIFORM_READOUT_ERROR, UNIFORM_T1_US, UNIFORM_T2_US)
            for i in range(graph.num_qubits)
        )
        edges = tuple(EdgeCalibration(e, UNIFORM_TWO_QUBIT_ERROR) for e in graph.edges)
        return CalibrationSnapshot(stamp, qubits, edges)

    rng = np.random.default_rng(np.random.SeedSequence((seed, graph.num_qubits)))
    qubits = []
    for i in range(graph.num_qubits):
        readout = _log_uniform(rng, *READOUT_ERROR_RANGE)
        t1 = float(rng.uniform(*T1_RANGE_US))
        t2 = t1 * float(rng.uniform(0.5, 1.2))  # t2 <= 2*t1 by construction
        qubits.append(QubitCalibration(i, readout, t1, t2))
    edges = tuple(
        EdgeCalibration(e, _log_uniform(rng, *TWO_QUBIT_ERROR_RANGE))
        for e in graph.edges
    )
    return CalibrationSnapshot(stamp, tuple(qubits), edges)
