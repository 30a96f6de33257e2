"""Exact maximum independent set enumeration (branch and bound)."""

from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Sequence, Tuple, Union

import networkx as nx

from ..errors import NumericalError
from .reduction import MisGraph, VertexId

MAX_ORACLE_VERTICES = 40


@dataclass
class MisResult:
    alpha: int
    maximum_sets: List[Tuple[Hashable, ...]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"alpha": self.alpha, "maximum_sets": [list(s) for s in self.maximum_sets]}


def _as_networkx(graph: Union[MisGraph, nx.Graph]) -> nx.Graph:
    if isinstance(graph, MisGraph):
        return graph.to_networkx()
    return graph


def _adjacency_masks(graph: nx.Graph, nodes: Sequence[Hashable]) -> List[int]:
    position = {node: i for i, node in enumerate(nodes)}
    masks = [0] * len(nodes)
    for u, v in graph.edges():
        if u == v:
            continue
        masks[position[u]] |= 1 << position[v]
        masks[position[v]] |= 1 << position[u]
    return masks


def _clique_cover_size(candidates: int, adjacency: List[int]) -> int:
    """Greedy clique partition of the candidate set; an upper bound on its independence number"""
    cliques: List[int] = []
    remaining = candidates
    while remaining:
        low = remaining & -remaining
        v = low.bit_length() - 1
        remaining ^= low
        for i, clique in enumerate(cliques):
            if clique & ~adjacency[v] == 0:
                cliques[i] = clique | low
                break
        else:
            cliques.append(low)
    return len(cliques)


class _BranchAndBound:
    def __init__(self, adjacency: List[int]):
        self.adjacency = adjacency
        self.best = 0
        self.found: List[int] = []

    def run(self, candidates: int) -> None:
        self._search(candidates, 0, 0)

    def _search(self, candidates: int, chosen: int, size: int) -> None:
        if candidates == 0:
            if size > self.best:
                self.best = size
                self.found = [chosen]
            elif size == self.best:
                self.found.append(chosen)
            return

        if size + _clique_cover_size(candidates, self.adjacency) < self.best:
            return

        # branch on the candidate with the most neighbours among candidates
        v = max(
            (i for i in range(len(self.adjacency)) if candidates >> i & 1),
            key=lambda i: (bin(self.adjacency[i] & candidates).count("1"), -i),
        )
        bit = 1 << v
        neighbours = self.adjacency[v] & candidates
        self._search(candidates & ~neighbours & ~bit, chosen | bit, size + 1)
        if neighbours:
            # a candidate with no remaining neighbour belongs to every maximum extension
            self._search(candidates & ~bit, chosen, size)


def enumerate_mis(graph: Union[MisGraph, nx.Graph]) -> MisResult:
    """Independence number and every maximum independent set.

    Sets are returned as sorted tuples of node labels (vertex indices for a MisGraph)
    and the list itself is sorted lexicographically.
    """
    g = _as_networkx(graph)
    nodes = sorted(g.nodes())
    if len(nodes) > MAX_ORACLE_VERTICES:
        raise NumericalError(
            f"{len(nodes)} vertices exceeds the exact oracle limit of {MAX_ORACLE_VERTICES}", stage="oracle"
        )
    if not nodes:
        return MisResult(alpha=0, maximum_sets=[()])

    search = _BranchAndBound(_adjacency_masks(g, nodes))
    search.run((1 << len(nodes)) - 1)

    sets = {tuple(nodes[i] for i in range(len(nodes)) if mask >> i & 1) for mask in search.found}
    return MisResult(alpha=search.best, maximum_sets=sorted(sets))


def scan_mis(graph: Union[MisGraph, nx.Graph]) -> MisResult:
    """Naive 2^|V| subset scan; reference implementation for small graphs"""
    g = _as_networkx(graph)
    nodes = sorted(g.nodes())
    adjacency = _adjacency_masks(g, nodes)
    best, found = 0, []
    for mask in range(1 << len(nodes)):
        if any(mask >> i & 1 and adjacency[i] & mask for i in range(len(nodes))):
            continue
        size = bin(mask).count("1")
        if size > best:
            best, found = size, [mask]
        elif size == best:
            found.append(mask)
    sets = sorted(tuple(nodes[i] for i in range(len(nodes)) if m >> i & 1) for m in found)
    return MisResult(alpha=best, maximum_sets=sets)


def as_vertex_ids(g: MisGraph, result: MisResult) -> List[Tuple[VertexId, ...]]:
    return [tuple(g.vertices[i][0] for i in s) for s in result.maximum_sets]
