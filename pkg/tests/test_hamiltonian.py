import numpy as np
import pytest

from rydsat.atoms.embedding import TWO_PI
from rydsat.atoms.hamiltonian import (
    DEFAULT_DELTA0,
    DENSE_LIMIT,
    DriveParams,
    GraphU,
    Ideal,
    VdW,
    build,
    build_parts,
    ground_state,
    independent_basis,
    interactions,
    is_hermitian,
    model_from_name,
    reference_manifold,
    spectrum,
)
from rydsat.errors import InputError, NumericalError
from rydsat.sat.formula import Formula
from rydsat.sat.oracle import enumerate_mis
from rydsat.sat.reduction import reduce

EDGE_U = TWO_PI * 1.0e6 / 7.0**6


def _as_set(config: int, num_atoms: int) -> tuple:
    return tuple(i for i in range(num_atoms) if config >> i & 1)


def _single_atom():
    return reduce(Formula.from_lists(1, [[1]]))


def test_model_from_name():
    assert model_from_name("ideal") == Ideal()
    assert model_from_name("GraphU").u == pytest.approx(EDGE_U)
    assert model_from_name("vdw", c6=5.0) == VdW(5.0)
    with pytest.raises(InputError):
        model_from_name("ising")


def test_interaction_matrices(g1, g1_embedding):
    ideal = interactions(g1, Ideal())
    graph = interactions(g1, GraphU(3.0))
    vdw = interactions(g1_embedding, VdW())

    assert np.isinf(ideal[0, 3]) and ideal[0, 4] == 0.0
    assert graph[3, 5] == graph[5, 3] == 3.0
    assert vdw[0, 3] == pytest.approx(EDGE_U, rel=1e-6)
    assert 0 < vdw[0, 4] < vdw[0, 3]
    assert np.all(np.diag(vdw) == 0.0)


def test_vdw_needs_positions(g1):
    with pytest.raises(InputError):
        interactions(g1, VdW())


def test_independent_basis_of_g1(g1):
    basis = independent_basis(g1.num_vertices, g1.edge_pairs())

    assert basis.size == 41
    assert basis[0] == 0
    assert np.all(np.diff(basis) > 0)


def test_subspace_and_full_dimensions(g1):
    ideal = build_parts(g1, Ideal())
    full = build_parts(g1, GraphU(EDGE_U))

    assert ideal.basis.size == 41
    assert full.basis.size == 256
    assert ideal.at(DriveParams(1.0, 1.0)).is_subspace
    assert not full.at(DriveParams(1.0, 1.0)).is_subspace


@pytest.mark.parametrize("model", [Ideal(), GraphU(EDGE_U)])
def test_operators_are_hermitian(g2, model):
    h = build(g2, model, DriveParams(TWO_PI, TWO_PI * 0.7))

    assert is_hermitian(h)
    dense = h.to_dense()
    assert np.allclose(dense, dense.conj().T)


def test_apply_matches_dense(g1):
    h = build(g1, GraphU(EDGE_U), DriveParams(2.0, -1.0))
    rng = np.random.default_rng(4)
    psi = rng.normal(size=h.dim) + 1j * rng.normal(size=h.dim)

    assert np.allclose(h.apply(psi), h.to_dense() @ psi)


def test_single_atom_ground_energy():
    h = build(_single_atom(), GraphU(1.0), DriveParams(omega=2.0, delta=0.0))

    states = ground_state(h)

    assert len(states) == 1
    assert states[0].energy == pytest.approx(-1.0)
    assert np.abs(states[0].state) ** 2 == pytest.approx([0.5, 0.5])


def test_rabi_factors_scale_the_drive():
    h = build(_single_atom(), GraphU(1.0), DriveParams(2.0, 0.0), rabi_factors=[0.5])

    assert ground_state(h)[0].energy == pytest.approx(-0.5)


def test_bad_rabi_factors(g1):
    with pytest.raises(InputError):
        build_parts(g1, Ideal(), rabi_factors=[1.0] * 3)
    with pytest.raises(InputError):
        build_parts(g1, Ideal(), rabi_factors=[1.0] * 7 + [-1.0])


def test_full_space_size_guard():
    g = reduce(Formula.from_lists(17, [[k] for k in range(1, 18)]))

    with pytest.raises(NumericalError):
        build_parts(g, GraphU(1.0))


def test_negative_rabi_frequency():
    with pytest.raises(InputError):
        DriveParams(-1.0, 0.0)


def test_reference_manifold_is_the_mis_set(g1):
    manifold = reference_manifold(g1)
    expected = enumerate_mis(g1).maximum_sets

    configs = sorted(_as_set(c, 8) for state in manifold for c in state.configurations())
    assert configs == expected
    assert all(state.energy == pytest.approx(-3 * TWO_PI * 2.0) for state in manifold)


def test_graph_model_mis_phase(g1):
    h = build(g1, GraphU(EDGE_U), DriveParams(0.0, TWO_PI * 2.0))

    manifold = ground_state(h)

    assert len(manifold) == 13
    assert sorted(_as_set(c, 8) for s in manifold for c in s.configurations()) == enumerate_mis(g1).maximum_sets


def test_ground_state_extends_to_degenerate_manifold(g1):
    h = build(g1, Ideal(), DriveParams(0.0, 1.0))

    assert len(ground_state(h, k=1)) == 13
    assert len(ground_state(h, k=14)) > 14


def test_driven_ground_state_is_normalised(g1):
    h = build(g1, Ideal(), DriveParams(TWO_PI, TWO_PI * 2.0))

    state = ground_state(h)[0]

    assert np.linalg.norm(state.full_vector()) == pytest.approx(1.0)
    assert state.energy == pytest.approx(spectrum(h)[0])


def test_spectrum_is_sorted(g3):
    values = spectrum(build(g3, Ideal(), DriveParams(TWO_PI, 0.0)))

    assert np.all(np.diff(values) >= -1e-12)


def test_spectrum_above_dense_limit_returns_lowest_levels():
    # thirteen uncoupled atoms: every level is a sum of single-atom levels
    g = reduce(Formula.from_lists(13, [[k] for k in range(1, 14)]))
    omega, delta = TWO_PI, TWO_PI * 0.5
    h = build(g, GraphU(EDGE_U), DriveParams(omega, delta))
    split = np.hypot(delta, omega)

    values = spectrum(h)

    assert h.dim > DENSE_LIMIT
    assert 1 < values.size < h.dim
    assert np.all(np.diff(values) >= -1e-9)
    assert values[0] == pytest.approx(13 * (-delta - split) / 2, rel=1e-9)
    assert values[1] - values[0] == pytest.approx(split, rel=1e-6)


def test_vdw_low_levels_follow_the_graph_ordering(g1, g1_embedding):
    graph = ground_state(build(g1, GraphU(EDGE_U), DriveParams(0.0, DEFAULT_DELTA0)))
    mis = {c for s in graph for c in s.configurations()}

    vdw = ground_state(build(g1_embedding, VdW(), DriveParams(0.0, DEFAULT_DELTA0)), k=12)
    lowest = [s.configurations()[0] for s in vdw]

    assert len(mis) == 13
    assert len(lowest) == 12
    assert set(lowest) <= mis
    assert lowest[0] == 0b01010100
