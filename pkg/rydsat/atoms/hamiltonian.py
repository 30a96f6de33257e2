"""Rydberg Hamiltonian over an atom arrangement or a bare MIS graph.

    H = sum_{j<k} U_jk n_j n_k - delta * sum_j n_j + (omega / 2) * sum_j f_j sigma^x_j

hbar = 1, energies are angular frequencies (rad/us), time in us. Atom i is bit i
of the basis index (little-endian), |0> ground and |1> Rydberg.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from ..errors import InputError, NumericalError
from ..sat.reduction import MisGraph
from .embedding import DEFAULT_C6, TWO_PI, Embedding

MAX_FULL_ATOMS = 16
MAX_SUBSPACE_ATOMS = 24
DENSE_LIMIT = 4096
DEGENERACY_TOL = 1e-9

DEFAULT_OMEGA = TWO_PI * 1.0
DEFAULT_DELTA0 = TWO_PI * 2.0

Source = Union[MisGraph, Embedding]


@dataclass(frozen=True)
class DriveParams:
    omega: float
    delta: float

    def __post_init__(self):
        if self.omega < 0:
            raise InputError(f"Rabi frequency must be non-negative, got {self.omega}", stage="hamiltonian")


@dataclass(frozen=True)
class Ideal:
    """Edged pairs are hard constraints; the Hilbert space is restricted to independent sets."""

    name: str = "ideal"


@dataclass(frozen=True)
class GraphU:
    u: float
    name: str = "graph"

    def __post_init__(self):
        if self.u <= 0:
            raise InputError(f"interaction strength must be positive, got {self.u}", stage="hamiltonian")


@dataclass(frozen=True)
class VdW:
    c6: float = DEFAULT_C6
    name: str = "vdw"

    def __post_init__(self):
        if self.c6 <= 0:
            raise InputError(f"c6 must be positive, got {self.c6}", stage="hamiltonian")


InteractionModel = Union[Ideal, GraphU, VdW]


def model_from_name(name: str, u: Optional[float] = None, c6: float = DEFAULT_C6) -> InteractionModel:
    name = name.lower()
    if name == "ideal":
        return Ideal()
    if name in ("graph", "graphu"):
        return GraphU(u if u is not None else TWO_PI * 1.0e6 / 7.0**6)
    if name == "vdw":
        return VdW(c6)
    raise InputError(f"unknown interaction model {name!r}", stage="hamiltonian")


def _atoms_and_edges(source: Source) -> Tuple[int, List[Tuple[int, int]]]:
    if isinstance(source, Embedding):
        return source.num_atoms, list(source.physical_edges)
    return source.num_vertices, source.edge_pairs()


def interactions(source: Source, model: InteractionModel) -> np.ndarray:
    """Symmetric pair-coupling matrix; the ideal model marks edges with +inf"""
    n, edges = _atoms_and_edges(source)
    U = np.zeros((n, n))
    if isinstance(model, VdW):
        if not isinstance(source, Embedding):
            raise InputError("van der Waals interactions need atom positions", stage="hamiltonian")
        positions = source.positions()
        diff = positions[:, None, :] - positions[None, :, :]
        r = np.sqrt((diff**2).sum(axis=-1))
        np.fill_diagonal(r, np.inf)
        return model.c6 / r**6
    value = np.inf if isinstance(model, Ideal) else model.u
    for u, v in edges:
        U[u, v] = U[v, u] = value
    return U


def independent_basis(num_atoms: int, edges: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Sorted basis indices of every independent set (configuration with no excited edged pair)"""
    if num_atoms > MAX_SUBSPACE_ATOMS:
        raise NumericalError(
            f"{num_atoms} atoms exceeds the subspace limit of {MAX_SUBSPACE_ATOMS}", stage="hamiltonian"
        )
    configs = np.arange(1 << num_atoms, dtype=np.int64)
    valid = np.ones(configs.size, dtype=bool)
    for u, v in edges:
        valid &= ((configs >> u) & (configs >> v) & 1) == 0
    return configs[valid]


def occupations(basis: np.ndarray, num_atoms: int) -> np.ndarray:
    """(dim, N) 0/1 matrix of Rydberg occupations"""
    return ((basis[:, None] >> np.arange(num_atoms)[None, :]) & 1).astype(float)


@dataclass(frozen=True)
class Operator:
    num_atoms: int
    basis: np.ndarray
    matrix: sp.csr_matrix
    drive: DriveParams

    @property
    def dim(self) -> int:
        return self.basis.size

    @property
    def is_subspace(self) -> bool:
        return self.dim != 1 << self.num_atoms

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.matrix @ vector

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_diagonal(self) -> bool:
        off = self.matrix - sp.diags(self.matrix.diagonal())
        return off.count_nonzero() == 0

    def norm_estimate(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max()) if self.dim else 0.0


@dataclass
class HamiltonianParts:
    """Drive-independent pieces of H; ``at(drive)`` assembles the operator for one instant."""

    num_atoms: int
    basis: np.ndarray
    interaction: np.ndarray
    occupation: np.ndarray
    hopping: sp.csr_matrix
    model: InteractionModel
    rabi_factors: np.ndarray = field(default_factory=lambda: np.ones(0))

    def at(self, drive: DriveParams) -> Operator:
        diagonal = sp.diags(self.interaction - drive.delta * self.occupation)
        matrix = (0.5 * drive.omega * self.hopping + diagonal).tocsr()
        return Operator(self.num_atoms, self.basis, matrix, drive)

    __call__ = at

    def number_operators(self) -> List[np.ndarray]:
        """Diagonal of n_j in the basis, per atom"""
        occ = occupations(self.basis, self.num_atoms)
        return [occ[:, j] for j in range(self.num_atoms)]

    def lowering_operators(self) -> List[sp.csr_matrix]:
        """sigma^-_j = |0><1| on atom j, restricted to the basis"""
        return [_flip_matrix(self.basis, j, lowering=True) for j in range(self.num_atoms)]


def _flip_matrix(basis: np.ndarray, atom: int, lowering: bool = False) -> sp.csr_matrix:
    dim = basis.size
    bit = np.int64(1) << atom
    if lowering:
        sources = np.nonzero(basis & bit)[0]
    else:
        sources = np.arange(dim)
    flipped = basis[sources] ^ bit
    position = np.searchsorted(basis, flipped)
    inside = position < dim
    inside[inside] = basis[position[inside]] == flipped[inside]
    rows, cols = position[inside], sources[inside]
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(dim, dim))


def build_parts(
    source: Source,
    model: InteractionModel,
    rabi_factors: Optional[Sequence[float]] = None,
    max_atoms: int = MAX_FULL_ATOMS,
) -> HamiltonianParts:
    n, edges = _atoms_and_edges(source)
    if isinstance(model, Ideal):
        basis = independent_basis(n, edges)
    else:
        if n > max_atoms:
            raise NumericalError(f"{n} atoms exceeds the full-space limit of {max_atoms}", stage="hamiltonian")
        basis = np.arange(1 << n, dtype=np.int64)

    factors = np.ones(n) if rabi_factors is None else np.asarray(rabi_factors, dtype=float)
    if factors.shape != (n,) or np.any(factors <= 0):
        raise InputError(f"need {n} positive Rabi factors", stage="hamiltonian")

    occ = occupations(basis, n)
    if isinstance(model, Ideal):
        interaction = np.zeros(basis.size)
    else:
        U = interactions(source, model)
        interaction = 0.5 * np.einsum("bi,ij,bj->b", occ, U, occ)

    hopping = sp.csr_matrix((basis.size, basis.size))
    for j in range(n):
        hopping = hopping + factors[j] * _flip_matrix(basis, j)

    return HamiltonianParts(
        num_atoms=n,
        basis=basis,
        interaction=interaction,
        occupation=occ.sum(axis=1),
        hopping=hopping.tocsr(),
        model=model,
        rabi_factors=factors,
    )


def build(
    source: Source,
    model: InteractionModel,
    drive: DriveParams,
    rabi_factors: Optional[Sequence[float]] = None,
    max_atoms: int = MAX_FULL_ATOMS,
) -> Operator:
    return build_parts(source, model, rabi_factors, max_atoms).at(drive)


@dataclass(frozen=True)
class GroundState:
    energy: float
    state: np.ndarray
    basis: np.ndarray
    num_atoms: int

    def configurations(self, tol: float = 1e-9) -> List[int]:
        """Basis indices carrying weight above tol"""
        return [int(c) for c, a in zip(self.basis, self.state) if abs(a) ** 2 > tol]

    def full_vector(self) -> np.ndarray:
        out = np.zeros(1 << self.num_atoms, dtype=complex)
        out[self.basis] = self.state
        return out


def _diagonal_order(h: Operator) -> Tuple[np.ndarray, np.ndarray]:
    # ties broken by basis index
    diagonal = h.matrix.diagonal().real
    order = np.lexsort((np.arange(h.dim), diagonal))
    return diagonal[order], order


def _manifold_cut(values: np.ndarray, k: int, tol: float) -> int:
    scale = max(1.0, abs(values[0]))
    count = min(k, values.size)
    while count < values.size and abs(values[count] - values[count - 1]) <= tol * scale:
        count += 1
    return count


def _eigenpairs(h: Operator, k: int) -> Tuple[np.ndarray, np.ndarray]:
    if h.dim <= DENSE_LIMIT:
        return eigh(h.to_dense())
    try:
        values, vectors = eigsh(h.matrix, k=min(k + 8, h.dim - 1), which="SA", tol=1e-12)
    except ArpackNoConvergence as e:
        raise NumericalError(f"iterative eigensolver did not converge: {e}", stage="hamiltonian")
    order = np.argsort(values)
    return values[order], vectors[:, order]


def ground_state(h: Operator, k: int = 1, degeneracy_tol: float = DEGENERACY_TOL) -> List[GroundState]:
    """The k lowest eigenpairs, extended to the whole degenerate manifold at the cut"""
    if h.num_atoms > MAX_FULL_ATOMS and not h.is_subspace:
        raise NumericalError(f"{h.num_atoms} atoms too many for exact diagonalisation", stage="hamiltonian")
    if h.is_diagonal():
        values, order = _diagonal_order(h)
        count = _manifold_cut(values, k, degeneracy_tol)
        states = []
        for i in range(count):
            vector = np.zeros(h.dim)
            vector[order[i]] = 1.0
            states.append(GroundState(float(values[i]), vector, h.basis, h.num_atoms))
        return states

    values, vectors = _eigenpairs(h, k)
    count = _manifold_cut(values, k, degeneracy_tol)
    return [
        GroundState(float(values[i]), vectors[:, i] / np.linalg.norm(vectors[:, i]), h.basis, h.num_atoms)
        for i in range(count)
    ]


def spectrum(h: Operator, lowest: int = 16) -> np.ndarray:
    """Eigenvalues in ascending order; above DENSE_LIMIT only the lowest few"""
    if h.is_diagonal():
        return _diagonal_order(h)[0]
    if h.dim > DENSE_LIMIT:
        return _eigenpairs(h, lowest)[0]
    return eigh(h.to_dense(), eigvals_only=True)


def reference_manifold(source: Source, delta: float = DEFAULT_DELTA0) -> List[GroundState]:
    """Ideal-model ground manifold at omega = 0, delta > 0: the maximum independent sets"""
    return ground_state(build(source, Ideal(), DriveParams(0.0, delta)), k=1)


def is_hermitian(h: Operator, seed: int = 0, tol: float = 1e-12) -> bool:
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=h.dim) + 1j * rng.normal(size=h.dim)
    phi = rng.normal(size=h.dim) + 1j * rng.normal(size=h.dim)
    lhs = np.vdot(psi, h.apply(phi))
    rhs = np.conj(np.vdot(phi, h.apply(psi)))
    return abs(lhs - rhs) <= tol * max(1.0, abs(lhs))
