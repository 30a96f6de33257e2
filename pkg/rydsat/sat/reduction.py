"""Formula -> MIS graph compiler and the inverse decoding of independent sets.

Vertices are ordered clause-major, slot-minor. Intra-clause edges make every
clause a clique; inter-clause edges join complementary literals of different
clauses.
"""

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

import networkx as nx

from ..errors import InputError, InternalConsistencyError
from .formula import Assignment, Formula, Literal

INTRA = "intra"
INTER = "inter"


@dataclass(frozen=True, order=True)
class VertexId:
    clause: int
    slot: int

    def label(self) -> str:
        return f"C{self.clause}.{self.slot}"


@dataclass(frozen=True, order=True)
class Edge:
    u: int
    v: int
    kind: str


@dataclass(frozen=True)
class MisGraph:
    vertices: Tuple[Tuple[VertexId, Literal], ...]
    edges: Tuple[Edge, ...]
    num_clauses: int
    num_variables: int

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def vertex_ids(self) -> List[VertexId]:
        return [vid for vid, _ in self.vertices]

    def literal(self, index: int) -> Literal:
        return self.vertices[index][1]

    def index_of(self, vertex: Union[VertexId, int]) -> int:
        if isinstance(vertex, int):
            if not 0 <= vertex < self.num_vertices:
                raise InputError(f"unknown vertex index {vertex}", stage="reduction")
            return vertex
        for index, (vid, _) in enumerate(self.vertices):
            if vid == vertex:
                return index
        raise InputError(f"unknown vertex {vertex}", stage="reduction")

    def clause_members(self) -> List[List[int]]:
        members: List[List[int]] = [[] for _ in range(self.num_clauses)]
        for index, (vid, _) in enumerate(self.vertices):
            members[vid.clause].append(index)
        return members

    def edge_pairs(self, kind: Optional[str] = None) -> List[Tuple[int, int]]:
        return [(e.u, e.v) for e in self.edges if kind is None or e.kind == kind]

    def count(self, kind: str) -> int:
        return sum(1 for e in self.edges if e.kind == kind)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        for index, (vid, lit) in enumerate(self.vertices):
            graph.add_node(index, clause=vid.clause, slot=vid.slot, literal=lit.to_int())
        for edge in self.edges:
            graph.add_edge(edge.u, edge.v, kind=edge.kind)
        return graph

    def to_dict(self) -> Dict:
        return {
            "num_clauses": self.num_clauses,
            "num_variables": self.num_variables,
            "vertices": [
                {"index": i, "clause": vid.clause, "slot": vid.slot, "literal": lit.to_int(), "label": lit.label()}
                for i, (vid, lit) in enumerate(self.vertices)
            ],
            "edges": [{"u": e.u, "v": e.v, "kind": e.kind} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "MisGraph":
        try:
            vertices = tuple(
                (VertexId(v["clause"], v["slot"]), Literal.from_int(v["literal"]))
                for v in sorted(data["vertices"], key=lambda v: v["index"])
            )
            edges = tuple(sorted(Edge(min(e["u"], e["v"]), max(e["u"], e["v"]), e["kind"]) for e in data["edges"]))
            return cls(vertices, edges, int(data["num_clauses"]), int(data["num_variables"]))
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"malformed graph JSON: {e}", stage="reduction")


def reduce(formula: Formula) -> MisGraph:
    """Compile a formula into its MIS graph"""
    vertices = tuple(
        (VertexId(j, k), lit) for j, clause in enumerate(formula.clauses) for k, lit in enumerate(clause.literals)
    )
    edges: List[Edge] = []
    for (a, (va, la)), (b, (vb, lb)) in combinations(enumerate(vertices), 2):
        if va.clause == vb.clause:
            edges.append(Edge(a, b, INTRA))
        elif la == lb.negation():
            edges.append(Edge(a, b, INTER))
    return MisGraph(vertices, tuple(sorted(edges)), formula.num_clauses, formula.num_variables)


def _indices(g: MisGraph, selection: Iterable[Union[VertexId, int]]) -> Set[int]:
    return {g.index_of(v) for v in selection}


def is_independent(g: MisGraph, selection: Iterable[Union[VertexId, int]]) -> bool:
    chosen = _indices(g, selection)
    return not any(e.u in chosen and e.v in chosen for e in g.edges)


def decode(g: MisGraph, selection: Iterable[Union[VertexId, int]]) -> Assignment:
    """Turn an independent set of size N_C back into a satisfying assignment"""
    chosen = _indices(g, selection)
    if not is_independent(g, chosen):
        raise InputError("selection is not an independent set", stage="reduction")
    if len(chosen) != g.num_clauses:
        raise InputError(f"selection has {len(chosen)} vertices, need {g.num_clauses}", stage="reduction")

    demands: Dict[int, bool] = {}
    for index in sorted(chosen):
        lit = g.literal(index)
        wanted = not lit.negated
        if demands.get(lit.variable, wanted) != wanted:
            raise InternalConsistencyError(f"conflicting demands on x{lit.variable}", stage="reduction")
        demands[lit.variable] = wanted
    return Assignment(tuple(demands.get(k, False) for k in range(1, g.num_variables + 1)))


def save_graph(g: MisGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(g.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_graph(path: Union[str, Path]) -> MisGraph:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read graph {path}: {e}", stage="reduction")
    return MisGraph.from_dict(data)
