"""Geometric realisation of a MIS graph as an atom arrangement.

Clause gadgets are segments (2 literals) or equilateral triangles (3 literals)
of side d. Inter-clause edges are realised directly at distance d when the
layout optimiser can do so; otherwise they are routed through an even-length
chain of auxiliary atoms (a quantum wire). Every edged pair sits at d within
tolerance and every other pair sits beyond the blockade distance d_B.

Positions are in micrometres. Literal atoms come first in vertex order, so atom i
is vertex i of the source graph; auxiliary atoms follow, wire by wire.
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.spatial.transform import Rotation

from ..errors import ConfigError, GeometryError, InputError
from ..sat.reduction import INTER, MisGraph, VertexId
from ..utils.logger import logger

TWO_PI = 2.0 * np.pi
DEFAULT_C6 = TWO_PI * 1.0e6  # rad/us * um^6

LITERAL = "literal"
AUXILIARY = "auxiliary"

Pair = Tuple[int, int]

MAX_WIRE_SETS = 16


@dataclass(frozen=True)
class GeometryParams:
    d: float = 7.0
    d_blockade: float = 10.0
    edge_tolerance: float = 0.05
    min_separation: float = 3.0

    def __post_init__(self):
        if not 0 < self.d < self.d_blockade:
            raise ConfigError(f"need 0 < d < d_B, got d={self.d}, d_B={self.d_blockade}")
        if not 0 < self.edge_tolerance <= 0.1 * (self.d_blockade - self.d):
            raise ConfigError("edge_tolerance must be positive and well below d_B - d")
        if not 0 < self.min_separation < self.d - self.edge_tolerance:
            raise ConfigError("min_separation must be positive and below d")

    def to_dict(self) -> Dict:
        return {
            "d": self.d,
            "d_blockade": self.d_blockade,
            "edge_tolerance": self.edge_tolerance,
            "min_separation": self.min_separation,
        }


@dataclass(frozen=True)
class AtomSite:
    id: int
    role: str
    position: Tuple[float, float, float]
    vertex: Optional[VertexId] = None
    wire_id: Optional[int] = None
    wire_position: Optional[int] = None

    def label(self) -> str:
        if self.role == LITERAL:
            return self.vertex.label()
        return f"a{self.wire_id}.{self.wire_position}"


@dataclass(frozen=True)
class Wire:
    wire_id: int
    endpoints: Tuple[VertexId, VertexId]
    chain: Tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.chain)


@dataclass(frozen=True)
class Hinge:
    """Rigid rotation of a gadget's atoms about an axis through a pivot atom.

    The rotation vector holds the full (alpha = 1) rotation in radians.
    """

    clause: int
    atoms: Tuple[int, ...]
    pivot: int
    rotvec: Tuple[float, float, float]

    def to_dict(self) -> Dict:
        return {"clause": self.clause, "atoms": list(self.atoms), "pivot": self.pivot, "rotvec": list(self.rotvec)}

    @classmethod
    def from_dict(cls, data: Dict) -> "Hinge":
        return cls(int(data["clause"]), tuple(data["atoms"]), int(data["pivot"]), tuple(data["rotvec"]))


@dataclass(frozen=True)
class Embedding:
    graph: MisGraph
    sites: Tuple[AtomSite, ...]
    wires: Tuple[Wire, ...]
    physical_edges: Tuple[Pair, ...]
    params: GeometryParams
    dimension: int = 2
    hinges: Tuple[Hinge, ...] = ()

    @property
    def num_atoms(self) -> int:
        return len(self.sites)

    def positions(self) -> np.ndarray:
        return np.array([site.position for site in self.sites], dtype=float)

    def with_positions(self, positions: np.ndarray, dimension: Optional[int] = None) -> "Embedding":
        sites = tuple(
            replace(site, position=tuple(float(c) for c in positions[site.id])) for site in self.sites
        )
        return replace(self, sites=sites, dimension=dimension or self.dimension)

    def wire_atoms(self) -> List[int]:
        return [atom for wire in self.wires for atom in wire.chain]

    def to_dict(self) -> Dict:
        return {
            "dimension": self.dimension,
            "params": self.params.to_dict(),
            "graph": self.graph.to_dict(),
            "sites": [
                {
                    "id": s.id,
                    "role": s.role,
                    "label": s.label(),
                    "position": list(s.position),
                    "vertex": [s.vertex.clause, s.vertex.slot] if s.vertex else None,
                    "wire_id": s.wire_id,
                    "wire_position": s.wire_position,
                }
                for s in self.sites
            ],
            "wires": [
                {
                    "wire_id": w.wire_id,
                    "endpoints": [[v.clause, v.slot] for v in w.endpoints],
                    "chain": list(w.chain),
                }
                for w in self.wires
            ],
            "physical_edges": [list(p) for p in self.physical_edges],
            "hinges": [h.to_dict() for h in self.hinges],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Embedding":
        try:
            sites = tuple(
                AtomSite(
                    id=int(s["id"]),
                    role=s["role"],
                    position=tuple(float(c) for c in s["position"]),
                    vertex=VertexId(*s["vertex"]) if s.get("vertex") is not None else None,
                    wire_id=s.get("wire_id"),
                    wire_position=s.get("wire_position"),
                )
                for s in sorted(data["sites"], key=lambda s: s["id"])
            )
            wires = tuple(
                Wire(int(w["wire_id"]), tuple(VertexId(*v) for v in w["endpoints"]), tuple(w["chain"]))
                for w in data["wires"]
            )
            return cls(
                graph=MisGraph.from_dict(data["graph"]),
                sites=sites,
                wires=wires,
                physical_edges=tuple(sorted(tuple(sorted(p)) for p in data["physical_edges"])),
                params=GeometryParams(**data.get("params", {})),
                dimension=int(data.get("dimension", 2)),
                hinges=tuple(Hinge.from_dict(h) for h in data.get("hinges", [])),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"malformed embedding JSON: {e}", stage="embedding")


@dataclass(frozen=True)
class Violation:
    kind: str
    pair: Pair
    distance: float
    limit: float

    def __str__(self) -> str:
        return f"{self.kind} {self.pair}: {self.distance:.4f} um (limit {self.limit:.4f} um)"


@dataclass
class ResidualStats:
    mean: float
    max: float
    pairs: List[Tuple[int, int, float, float]] = field(default_factory=list)

    @property
    def mean_mhz(self) -> float:
        return self.mean / TWO_PI

    @property
    def max_mhz(self) -> float:
        return self.max / TWO_PI

    def to_dict(self) -> Dict:
        return {
            "mean_mhz": self.mean_mhz,
            "max_mhz": self.max_mhz,
            "pairs": [
                {"i": i, "j": j, "distance_um": r, "coupling_mhz": u / TWO_PI} for i, j, r, u in self.pairs
            ],
        }


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------


def _pair_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def logical_edges_covered(e: Embedding) -> List[Pair]:
    """Logical edges of the source graph that are neither physical nor wired"""
    physical = set(e.physical_edges)
    wired = {tuple(sorted(e.graph.index_of(v) for v in w.endpoints)) for w in e.wires}
    return [p for p in e.graph.edge_pairs() if p not in physical and p not in wired]


def validate_geometry(e: Embedding) -> List[Violation]:
    """Every broken invariant of the embedding; empty when the geometry is sound"""
    violations: List[Violation] = []
    positions = e.positions()
    if not np.all(np.isfinite(positions)):
        bad = [s.id for s in e.sites if not np.all(np.isfinite(s.position))]
        return [Violation("non-finite-position", (i, i), float("nan"), 0.0) for i in bad]

    p = e.params
    dist = _pair_distances(positions)
    edges = set(e.physical_edges)
    for i, j in combinations(range(e.num_atoms), 2):
        r = float(dist[i, j])
        if (i, j) in edges:
            if abs(r - p.d) > p.edge_tolerance:
                violations.append(Violation("edge-length", (i, j), r, p.d))
        elif r <= p.d_blockade:
            violations.append(Violation("blockade-separation", (i, j), r, p.d_blockade))
        if r < p.min_separation:
            violations.append(Violation("min-separation", (i, j), r, p.min_separation))

    for wire in e.wires:
        if wire.length % 2 or wire.length == 0:
            violations.append(Violation("wire-parity", (wire.wire_id, wire.length), float(wire.length), 2.0))
    for pair in logical_edges_covered(e):
        violations.append(Violation("uncovered-edge", pair, float(dist[pair]), p.d))
    if e.dimension == 2 and np.any(np.abs(positions[:, 2]) > 1e-9):
        violations.append(Violation("out-of-plane", (0, 0), float(np.abs(positions[:, 2]).max()), 0.0))
    return violations


def residual_stats(e: Embedding, c6: float = DEFAULT_C6) -> ResidualStats:
    """c6/r^6 over all pairs that are not physical edges (angular units)"""
    dist = _pair_distances(e.positions())
    edges = set(e.physical_edges)
    pairs = []
    for i, j in combinations(range(e.num_atoms), 2):
        if (i, j) in edges:
            continue
        r = float(dist[i, j])
        pairs.append((i, j, r, c6 / r**6))
    if not pairs:
        return ResidualStats(mean=0.0, max=0.0, pairs=[])
    couplings = np.array([u for *_, u in pairs])
    return ResidualStats(mean=float(couplings.mean()), max=float(couplings.max()), pairs=pairs)


# ---------------------------------------------------------------------------
# Layout optimisation
# ---------------------------------------------------------------------------


def _gadget_template(size: int, d: float) -> np.ndarray:
    if size == 1:
        return np.zeros((1, 3))
    if size == 2:
        return np.array([[-d / 2, 0.0, 0.0], [d / 2, 0.0, 0.0]])
    radius = d / np.sqrt(3.0)
    angles = np.deg2rad([90.0, 210.0, 330.0])
    return np.stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(3)], axis=1)


@dataclass
class _Topology:
    num_atoms: int
    edges: np.ndarray
    non_edges: np.ndarray
    wires: Tuple[Wire, ...]
    direct_inter: List[Pair]


def _topology(g: MisGraph, wired: Dict[Pair, int]) -> _Topology:
    """Physical edge set when the given logical edges are routed through wires of the given lengths"""
    edges: Set[Pair] = set()
    wires: List[Wire] = []
    direct_inter: List[Pair] = []
    next_atom = g.num_vertices
    for u, v in g.edge_pairs():
        kind = next(e.kind for e in g.edges if (e.u, e.v) == (u, v))
        if (u, v) not in wired:
            edges.add((u, v))
            if kind == INTER:
                direct_inter.append((u, v))
            continue
        chain = tuple(range(next_atom, next_atom + wired[(u, v)]))
        next_atom += len(chain)
        path = (u,) + chain + (v,)
        edges.update(tuple(sorted(p)) for p in zip(path, path[1:]))
        wires.append(Wire(len(wires), (g.vertices[u][0], g.vertices[v][0]), chain))

    non_edges = [p for p in combinations(range(next_atom), 2) if p not in edges]
    return _Topology(
        num_atoms=next_atom,
        edges=np.array(sorted(edges), dtype=int).reshape(-1, 2),
        non_edges=np.array(non_edges, dtype=int).reshape(-1, 2),
        wires=tuple(wires),
        direct_inter=direct_inter,
    )


class LayoutProblem:
    """Penalty objective over free atom coordinates.

    f = mean over non-edges of (d_B/r)^6
        + mu * sum over edges ((r - d)/d)^2
        + mu * sum over non-edges max(0, (s - r)/d)^2,   s = d_B + margin
    """

    def __init__(self, topology: _Topology, params: GeometryParams, dimension: int):
        self.topology = topology
        self.params = params
        self.dimension = dimension
        self.margin = 0.1 * (params.d_blockade - params.d)
        self.mu = 1.0

    def _split(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(self.topology.num_atoms, self.dimension)

    def objective(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        X = self._split(x)
        grad = np.zeros_like(X)
        p = self.params
        value = 0.0

        edges, non_edges = self.topology.edges, self.topology.non_edges
        if len(non_edges):
            diff = X[non_edges[:, 0]] - X[non_edges[:, 1]]
            r = np.maximum(np.linalg.norm(diff, axis=1), 1e-9)
            scaled = (p.d_blockade / r) ** 6
            value += scaled.mean()
            dfdr = -6.0 * scaled / r / len(r)

            short = np.maximum(0.0, p.d_blockade + self.margin - r)
            value += self.mu * np.sum((short / p.d) ** 2)
            dfdr += -2.0 * self.mu * short / p.d**2

            g = (dfdr / r)[:, None] * diff
            np.add.at(grad, non_edges[:, 0], g)
            np.add.at(grad, non_edges[:, 1], -g)

        if len(edges):
            diff = X[edges[:, 0]] - X[edges[:, 1]]
            r = np.maximum(np.linalg.norm(diff, axis=1), 1e-9)
            stretch = r - p.d
            value += self.mu * np.sum((stretch / p.d) ** 2)
            g = (2.0 * self.mu * stretch / p.d**2 / r)[:, None] * diff
            np.add.at(grad, edges[:, 0], g)
            np.add.at(grad, edges[:, 1], -g)

        return float(value), grad.ravel()

    def constraint_residuals(self, x: np.ndarray) -> np.ndarray:
        X = self._split(x)
        p = self.params
        parts = []
        if len(self.topology.edges):
            e = self.topology.edges
            parts.append((np.linalg.norm(X[e[:, 0]] - X[e[:, 1]], axis=1) - p.d) / p.d)
        if len(self.topology.non_edges):
            n = self.topology.non_edges
            r = np.linalg.norm(X[n[:, 0]] - X[n[:, 1]], axis=1)
            parts.append(np.maximum(0.0, p.d_blockade + 0.5 * self.margin - r) / p.d)
        return np.concatenate(parts) if parts else np.zeros(1)

    def penalty(self, x: np.ndarray) -> float:
        return float(np.sum(self.constraint_residuals(x) ** 2))


@dataclass
class _Attempt:
    seed: int
    positions: np.ndarray
    violations: List[Violation]
    residual: float
    history: List[float]

    @property
    def valid(self) -> bool:
        return not self.violations


def _initial_positions(
    g: MisGraph, topology: _Topology, params: GeometryParams, dimension: int, rng: np.random.Generator
) -> np.ndarray:
    members = g.clause_members()
    quotient = nx.Graph()
    quotient.add_nodes_from(range(g.num_clauses))
    for u, v in g.edge_pairs(INTER):
        quotient.add_edge(g.vertices[u][0].clause, g.vertices[v][0].clause)
    scale = 1.8 * params.d * max(1.0, np.sqrt(g.num_clauses))
    layout = nx.spring_layout(
        quotient, dim=dimension, seed=int(rng.integers(2**31 - 1)), scale=scale
    )

    X = np.zeros((topology.num_atoms, 3))
    for clause, atoms in enumerate(members):
        template = _gadget_template(len(atoms), params.d)
        if dimension == 2:
            rotation = Rotation.from_euler("z", rng.uniform(0.0, TWO_PI))
        else:
            rotation = Rotation.random(random_state=int(rng.integers(2**31 - 1)))
        centre = np.zeros(3)
        centre[:dimension] = layout[clause]
        X[atoms] = centre + rotation.apply(template)

    for wire in topology.wires:
        u, v = (g.index_of(vid) for vid in wire.endpoints)
        steps = np.linspace(0.0, 1.0, wire.length + 2)[1:-1]
        for atom, t in zip(wire.chain, steps):
            X[atom] = (1 - t) * X[u] + t * X[v]
            X[atom, :dimension] += rng.normal(scale=0.3 * params.d, size=dimension)
    return X[:, :dimension]


def _anneal(
    problem: LayoutProblem, x0: np.ndarray, rng: np.random.Generator, iterations: int = 20000
) -> np.ndarray:
    """Simulated annealing on the penalised objective with single-atom Gaussian moves"""
    current = x0.copy()
    current_value, _ = problem.objective(current)
    best, best_value = current.copy(), current_value
    n, dim = problem.topology.num_atoms, problem.dimension
    temp_start, temp_end = 1.0, 1e-3

    for it in range(iterations):
        t = np.exp(np.log(temp_start) + (np.log(temp_end) - np.log(temp_start)) * it / iterations)
        atom = int(rng.integers(n))
        scale = problem.params.d * (0.5 * t / temp_start + 0.01)
        candidate = current.copy()
        candidate[atom * dim : (atom + 1) * dim] += rng.normal(scale=scale, size=dim)
        value, _ = problem.objective(candidate)
        delta = value - current_value
        if delta < 0 or rng.random() < np.exp(-delta / t):
            current, current_value = candidate, value
            if value < best_value:
                best, best_value = candidate.copy(), value
    return best


def _polish(problem: LayoutProblem, x: np.ndarray, history: List[float]) -> np.ndarray:
    for mu in (1.0, 10.0, 100.0, 1000.0):
        problem.mu = mu
        result = minimize(problem.objective, x, jac=True, method="L-BFGS-B", options={"maxiter": 500})
        if result.fun <= problem.objective(x)[0]:
            x = result.x
        value = problem.objective(x)[0]
        history.append(min(history[-1], value) if history else value)

    # constraint projection
    if problem.penalty(x) > 0:
        projected = least_squares(problem.constraint_residuals, x, xtol=1e-12, ftol=1e-12, max_nfev=2000)
        x = projected.x
    return x


def _build_embedding(
    g: MisGraph, topology: _Topology, positions: np.ndarray, params: GeometryParams, dimension: int
) -> Embedding:
    padded = np.zeros((topology.num_atoms, 3))
    padded[:, :dimension] = positions.reshape(topology.num_atoms, dimension)
    sites: List[AtomSite] = []
    for index, (vid, _) in enumerate(g.vertices):
        sites.append(AtomSite(index, LITERAL, tuple(padded[index]), vertex=vid))
    for wire in topology.wires:
        for k, atom in enumerate(wire.chain):
            sites.append(AtomSite(atom, AUXILIARY, tuple(padded[atom]), wire_id=wire.wire_id, wire_position=k))
    return Embedding(
        graph=g,
        sites=tuple(sites),
        wires=topology.wires,
        physical_edges=tuple(tuple(int(a) for a in p) for p in topology.edges),
        params=params,
        dimension=dimension,
    )


def _run_attempt(
    g: MisGraph, topology: _Topology, params: GeometryParams, dimension: int, seed: int, anneal: bool
) -> _Attempt:
    rng = np.random.default_rng(seed)
    problem = LayoutProblem(topology, params, dimension)
    x0 = _initial_positions(g, topology, params, dimension, rng).ravel()
    history: List[float] = []
    if anneal:
        problem.mu = 1000.0
        x0 = _anneal(problem, x0, rng)
    x = _polish(problem, x0, history)

    embedding = _build_embedding(g, topology, x, params, dimension)
    return _Attempt(
        seed=seed,
        positions=x,
        violations=validate_geometry(embedding),
        residual=residual_stats(embedding).mean,
        history=history,
    )


def _pick(attempts: List[_Attempt]) -> _Attempt:
    # valid first, then lowest residual, ties by seed order
    return min(attempts, key=lambda a: (not a.valid, len(a.violations), a.residual, a.seed))


def _most_stressed(
    topology: _Topology, attempt: _Attempt, params: GeometryParams, wired: Dict[Pair, int]
) -> Optional[Pair]:
    dimension = attempt.positions.size // topology.num_atoms
    X = attempt.positions.reshape(topology.num_atoms, dimension)
    stress: Dict[Pair, float] = {}
    for u, v in topology.direct_inter:
        stress[(u, v)] = abs(np.linalg.norm(X[u] - X[v]) - params.d)
    for violation in attempt.violations:
        for key in stress:
            if set(key) & set(violation.pair):
                stress[key] += abs(violation.distance - violation.limit)
    if stress:
        return max(sorted(stress), key=lambda k: stress[k])
    # every inter edge already wired: lengthen the first wire
    return sorted(wired)[0] if wired else None


def _best_for(
    g: MisGraph, topology: _Topology, params: GeometryParams, dimension: int, seeds: List[int], workers: int
) -> _Attempt:
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        attempts = list(pool.map(lambda s: _run_attempt(g, topology, params, dimension, s, False), seeds))
    best = _pick(attempts)
    if not best.valid:
        logger.debug("penalty restarts failed with %d wires; annealing", len(topology.wires))
        best = _pick([best, _run_attempt(g, topology, params, dimension, seeds[0], True)])
    return best


def embed(
    g: MisGraph,
    params: Optional[GeometryParams] = None,
    dimension: int = 2,
    rng_seed: int = 0,
    restarts: int = 8,
    max_wires: Optional[int] = None,
    workers: int = 1,
    max_wire_sets: int = MAX_WIRE_SETS,
) -> Embedding:
    """Place the graph's vertices as atoms, inserting wires only where direct realisation fails.

    Wire sets are tried in order of size: every choice of k inter-clause edges routed
    through two-atom wires, k = 0, 1, 2, ..., keeping the lowest-residual valid layout
    of the first size that admits one. Once a size has more than ``max_wire_sets``
    choices, the search grows wires one at a time on the most stressed edge instead.
    ``max_wires`` bounds the number of two-atom insertions.
    """
    params = params or GeometryParams()
    if dimension not in (2, 3):
        raise InputError(f"dimension must be 2 or 3, got {dimension}", stage="embedding")
    inter = g.edge_pairs(INTER)
    max_wires = len(inter) * 2 if max_wires is None else max_wires

    stage = 0
    best: Optional[_Attempt] = None
    best_wired: Dict[Pair, int] = {}
    for count in range(min(len(inter), max_wires) + 1):
        choices = list(combinations(inter, count))
        if count and len(choices) > max_wire_sets:
            break
        found: List[Tuple[_Attempt, Dict[Pair, int]]] = []
        for choice in choices:
            wired = {pair: 2 for pair in choice}
            seeds = [rng_seed + 1000 * stage + k for k in range(restarts)]
            stage += 1
            attempt = _best_for(g, _topology(g, wired), params, dimension, seeds, workers)
            if attempt.valid:
                found.append((attempt, wired))
            elif best is None or len(attempt.violations) < len(best.violations):
                best, best_wired = attempt, wired
        if found:
            attempt, wired = min(found, key=lambda item: (item[0].residual, sorted(item[1])))
            return _finish(g, _topology(g, wired), attempt, params, dimension)
        logger.info("no valid layout with %d wires", count)

    # too many wire sets to enumerate: grow wires one edge at a time from the least violated layout
    wired = dict(best_wired)
    while best is not None:
        pair = _most_stressed(_topology(g, wired), best, params, wired)
        if pair is None or sum(wired.values()) + 2 > 2 * max_wires:
            break
        wired[pair] = wired.get(pair, 0) + 2
        logger.info("routing edge %s through a wire of length %d", pair, wired[pair])
        topology = _topology(g, wired)
        seeds = [rng_seed + 1000 * stage + k for k in range(restarts)]
        stage += 1
        best = _best_for(g, topology, params, dimension, seeds, workers)
        if best.valid:
            return _finish(g, topology, best, params, dimension)

    raise GeometryError(
        f"no feasible geometry within {max_wires} wire insertions",
        violations=best.violations if best else [],
    )


def _finish(g: MisGraph, topology: _Topology, attempt: _Attempt, params: GeometryParams, dimension: int) -> Embedding:
    embedding = _build_embedding(g, topology, attempt.positions, params, dimension)
    logger.info(
        "embedded %d atoms (%d wires) in %dD, residual mean %.3f MHz",
        embedding.num_atoms,
        len(embedding.wires),
        dimension,
        residual_stats(embedding).mean_mhz,
    )
    return embedding


def optimizer_history(g: MisGraph, params: Optional[GeometryParams] = None, dimension: int = 2, seed: int = 0) -> List[float]:
    """Best objective after each penalty stage of a single restart"""
    params = params or GeometryParams()
    return _run_attempt(g, _topology(g, {}), params, dimension, seed, False).history


# ---------------------------------------------------------------------------
# Alpha transformation
# ---------------------------------------------------------------------------


def detect_star(e: Embedding) -> Tuple[int, List[Tuple[int, Tuple[int, ...]]]]:
    """Central atom and the (clause, atoms) groups hinged to it.

    The pattern: no wires, every inter-clause edge touches one central literal
    atom, and every other clause hangs off it by exactly one such edge.
    """
    g = e.graph
    inter = g.edge_pairs(INTER)
    if e.wires or not inter:
        raise GeometryError("hinge axis undefined: embedding is not a star of clause gadgets", stage="embedding")
    candidates = set(inter[0])
    for pair in inter[1:]:
        candidates &= set(pair)
    if len(candidates) != 1:
        raise GeometryError("hinge axis undefined: no unique central atom", stage="embedding")
    centre = candidates.pop()
    centre_clause = g.vertices[centre][0].clause

    attached: Dict[int, int] = {}
    for u, v in inter:
        other = v if u == centre else u
        clause = g.vertices[other][0].clause
        if clause in attached:
            raise GeometryError(f"hinge axis undefined: clause {clause} has two hinges", stage="embedding")
        attached[clause] = other

    groups = []
    for clause, atoms in enumerate(g.clause_members()):
        if clause == centre_clause:
            moving = tuple(a for a in atoms if a != centre)
        elif clause in attached:
            moving = tuple(atoms)
        else:
            raise GeometryError(f"hinge axis undefined: clause {clause} is not attached", stage="embedding")
        if moving:
            groups.append((clause, moving))
    return centre, groups


def _apply_hinges(positions: np.ndarray, hinges: Sequence[Hinge], alpha: float) -> np.ndarray:
    out = positions.copy()
    for hinge in hinges:
        rotation = Rotation.from_rotvec(alpha * np.asarray(hinge.rotvec, dtype=float))
        pivot = positions[hinge.pivot]
        atoms = list(hinge.atoms)
        out[atoms] = pivot + rotation.apply(positions[atoms] - pivot)
    return out


def _path_violations(e: Embedding, hinges: Sequence[Hinge], alphas: Sequence[float]) -> float:
    total = 0.0
    positions = e.positions()
    for alpha in alphas:
        moved = e.with_positions(_apply_hinges(positions, hinges, alpha), dimension=3)
        for v in validate_geometry(moved):
            total += abs(v.distance - v.limit) + 1.0
    return total


def plan_hinges(e: Embedding, c6: float = DEFAULT_C6, seed: int = 0) -> Tuple[Hinge, ...]:
    """Choose target rotations for a star embedding that minimise the residual mean at alpha = 1"""
    centre, groups = detect_star(e)
    positions = e.positions()
    pivot = positions[centre]

    arms = []
    for _, atoms in groups:
        arm = positions[list(atoms)].mean(axis=0) - pivot
        if np.linalg.norm(arm[:2]) < 1e-9:
            raise GeometryError("hinge axis undefined: gadget centred on the central atom", stage="embedding")
        arms.append(np.arctan2(arm[1], arm[0]))

    # evenly spread arms in the plane, keeping circular order and the mean heading
    order = np.argsort(arms)
    k = len(groups)
    spread = np.zeros(k)
    base = np.array(arms)[order]
    target = base[0] + TWO_PI * np.arange(k) / k
    offset = np.angle(np.mean(np.exp(1j * (base - target))))
    for rank, index in enumerate(order):
        delta = target[rank] + offset - base[rank]
        spread[index] = (delta + np.pi) % TWO_PI - np.pi

    def build(params: np.ndarray) -> Tuple[Hinge, ...]:
        return tuple(
            Hinge(clause, atoms, centre, tuple(float(c) for c in params[3 * i : 3 * i + 3]))
            for i, (clause, atoms) in enumerate(groups)
        )

    def cost(params: np.ndarray) -> float:
        hinges = build(params)
        moved = e.with_positions(_apply_hinges(positions, hinges, 1.0), dimension=3)
        return residual_stats(moved, c6).mean_mhz + 10.0 * _path_violations(e, hinges, (0.25, 0.5, 0.75, 1.0))

    starts = [np.concatenate([[0.0, 0.0, s] for s in spread])]
    rng = np.random.default_rng(seed)
    starts.append(starts[0] + rng.normal(scale=0.2, size=starts[0].shape))

    best_params, best_cost = None, np.inf
    for x0 in starts:
        for candidate in (x0, minimize(cost, x0, method="Nelder-Mead", options={"maxiter": 600}).x):
            value = cost(candidate)
            if value < best_cost:
                best_params, best_cost = candidate, value

    hinges = build(best_params)
    if _path_violations(e, hinges, np.linspace(0.0, 1.0, 21)) > 0:
        raise GeometryError("no hinge rotation keeps the geometry valid along the path", stage="embedding")
    return hinges


def transform_alpha(e: Embedding, alpha: float, hinge_spec: Optional[Sequence[Hinge]] = None) -> Embedding:
    """Rotate clause gadgets about their hinges by alpha times their target angle"""
    if not 0.0 <= alpha <= 1.0:
        raise InputError(f"alpha must lie in [0, 1], got {alpha}", stage="embedding")
    if alpha == 0.0:
        return e

    hinges = tuple(hinge_spec) if hinge_spec is not None else e.hinges or plan_hinges(e)
    moving = [a for h in hinges for a in h.atoms]
    if len(moving) != len(set(moving)):
        raise GeometryError("hinge atom groups overlap", stage="embedding")
    if any(h.pivot in h.atoms for h in hinges):
        raise GeometryError("hinge axis undefined: pivot inside its own gadget", stage="embedding")

    moved = e.with_positions(_apply_hinges(e.positions(), hinges, alpha), dimension=3)
    moved = replace(moved, hinges=hinges)
    violations = validate_geometry(moved)
    if violations:
        raise GeometryError(f"rotation at alpha={alpha} breaks the geometry", violations=violations)
    return moved


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def save_embedding(e: Embedding, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(e.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_embedding(path: Union[str, Path]) -> Embedding:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read embedding {path}: {e}", stage="embedding")
    return Embedding.from_dict(data)


def load_fixture(name: str) -> Embedding:
    """Shipped reference embeddings: 'g1', 'g2', 'g3'"""
    resource = resources.files("rydsat.data").joinpath(f"{name.lower()}_embedding.json")
    if not resource.is_file():
        raise InputError(f"no shipped embedding named {name!r}", stage="embedding")
    return Embedding.from_dict(json.loads(resource.read_text(encoding="utf-8")))


def write_positions_csv(e: Embedding, path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "label", "role", "x_um", "y_um", "z_um"])
        for site in e.sites:
            writer.writerow([site.id, site.label(), site.role, *(f"{c:.6f}" for c in site.position)])
