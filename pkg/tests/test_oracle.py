import networkx as nx
import pytest

from rydsat.errors import NumericalError
from rydsat.sat.formula import evaluate
from rydsat.sat.oracle import as_vertex_ids, enumerate_mis, scan_mis
from rydsat.sat.reduction import VertexId, decode, reduce


def test_g1_maximum_sets(g1):
    result = enumerate_mis(g1)

    assert result.alpha == 3
    assert len(result.maximum_sets) == 13
    assert sum(1 for s in result.maximum_sets if 3 in s) == 4
    assert sum(1 for s in result.maximum_sets if 4 in s) == 9
    assert result.maximum_sets == sorted(result.maximum_sets)


def test_every_g1_set_decodes(g1, psi1):
    for selection in enumerate_mis(g1).maximum_sets:
        assert evaluate(psi1, decode(g1, selection))


def test_contradiction_alpha(contradiction):
    result = enumerate_mis(reduce(contradiction))

    assert result.alpha == 1
    assert result.maximum_sets == [(0,), (1,)]


def test_as_vertex_ids(g1):
    ids = as_vertex_ids(g1, enumerate_mis(g1))

    assert ids[0] == (VertexId(0, 0), VertexId(1, 1), VertexId(2, 0))


def test_empty_graph():
    result = enumerate_mis(nx.Graph())

    assert result.alpha == 0
    assert result.maximum_sets == [()]


def test_isolated_vertices_join_every_set():
    graph = nx.path_graph(3)
    graph.add_node(7)

    result = enumerate_mis(graph)

    assert result.alpha == 3
    assert result.maximum_sets == [(0, 2, 7)]


@pytest.mark.parametrize("seed", range(12))
def test_branch_and_bound_matches_subset_scan(seed):
    graph = nx.gnp_random_graph(11, 0.3, seed=seed)

    fast = enumerate_mis(graph)
    slow = scan_mis(graph)

    assert fast.alpha == slow.alpha
    assert fast.maximum_sets == slow.maximum_sets


def test_size_guard():
    with pytest.raises(NumericalError):
        enumerate_mis(nx.empty_graph(41))
