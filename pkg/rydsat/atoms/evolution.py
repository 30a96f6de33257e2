"""Quasi-adiabatic sweeps: schedules, closed and open system integration, gaps and fidelities."""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from ..errors import InputError, NumericalError
from ..utils.logger import logger
from .embedding import DEFAULT_C6, TWO_PI, Embedding, Hinge, residual_stats, transform_alpha
from .hamiltonian import (
    DEFAULT_DELTA0,
    DEFAULT_OMEGA,
    DriveParams,
    GroundState,
    HamiltonianParts,
    Operator,
    VdW,
    build_parts,
    ground_state,
    reference_manifold,
    spectrum,
)

HamiltonianBuilder = Callable[[DriveParams], Operator]

MAX_DENSE_ATOMS = 10
MAX_GAP_ATOMS = 14
NORM_TOLERANCE = 1e-6
DEFAULT_GAMMA = 2.0 * np.pi * 0.03
DEFAULT_FRACTIONS = (0.25, 0.5, 0.25)
# final detuning comparable to the strongest residual couplings of a 2D layout
RESIDUAL_DELTA0 = TWO_PI * 1.0
RESIDUAL_OMEGA = TWO_PI * 2.0


@dataclass(frozen=True)
class Segment:
    duration: float
    omega: Tuple[float, float]
    delta: Tuple[float, float]

    def at(self, t: float) -> DriveParams:
        s = min(max(t / self.duration, 0.0), 1.0)
        omega = self.omega[0] + s * (self.omega[1] - self.omega[0])
        delta = self.delta[0] + s * (self.delta[1] - self.delta[0])
        return DriveParams(max(omega, 0.0), delta)


@dataclass(frozen=True)
class Schedule:
    segments: Tuple[Segment, ...]

    def __post_init__(self):
        if not self.segments:
            raise InputError("schedule needs at least one segment", stage="evolution")
        for segment in self.segments:
            if segment.duration <= 0:
                raise InputError(f"segment duration must be positive, got {segment.duration}", stage="evolution")

    @property
    def total_time(self) -> float:
        return sum(s.duration for s in self.segments)

    def drive_at(self, t: float) -> DriveParams:
        start = 0.0
        for segment in self.segments:
            if t <= start + segment.duration:
                return segment.at(t - start)
            start += segment.duration
        return self.segments[-1].at(self.segments[-1].duration)

    def steps(self, dt: float) -> List[Tuple[float, float]]:
        """(midpoint, length) of every integration step; steps never straddle a segment boundary"""
        out = []
        start = 0.0
        for segment in self.segments:
            n = max(1, math.ceil(segment.duration / dt - 1e-9))
            h = segment.duration / n
            out.extend((start + (k + 0.5) * h, h) for k in range(n))
            start += segment.duration
        return out

    def to_dict(self) -> Dict:
        return {
            "segments": [
                {"duration_us": s.duration, "omega": list(s.omega), "delta": list(s.delta)} for s in self.segments
            ]
        }


def default_schedule(
    delta0: float = DEFAULT_DELTA0,
    omega_max: float = DEFAULT_OMEGA,
    total_time: float = 4.0,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> Schedule:
    """Ramp omega up at -0.7 delta0, sweep delta to +delta0, ramp omega down"""
    if delta0 <= 0 or omega_max <= 0 or total_time <= 0:
        raise InputError("schedule parameters must be positive", stage="evolution")
    if len(fractions) != 3 or min(fractions) <= 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise InputError(f"schedule fractions must be three positive numbers summing to 1, got {fractions}", stage="evolution")
    start = -0.7 * delta0
    t1, t2, t3 = (f * total_time for f in fractions)
    return Schedule(
        (
            Segment(t1, (0.0, omega_max), (start, start)),
            Segment(t2, (omega_max, omega_max), (start, delta0)),
            Segment(t3, (omega_max, 0.0), (delta0, delta0)),
        )
    )


def residual_schedule(total_time: float = 4.0) -> Schedule:
    """Default-shaped sweep with RESIDUAL_DELTA0 and RESIDUAL_OMEGA, used to compare layouts"""
    return default_schedule(delta0=RESIDUAL_DELTA0, omega_max=RESIDUAL_OMEGA, total_time=total_time)


@dataclass(frozen=True)
class SimOptions:
    dt: float = 1e-3
    method: str = "krylov"
    trajectories: int = 0
    gamma_decay: float = 0.0
    gamma_dephase: float = 0.0
    open_mode: str = "auto"
    seed: int = 0
    workers: int = 1
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self):
        if self.dt <= 0:
            raise InputError(f"dt must be positive, got {self.dt}", stage="evolution")
        if self.method not in ("krylov", "adaptive"):
            raise InputError(f"unknown integrator {self.method!r}", stage="evolution")
        if self.gamma_decay < 0 or self.gamma_dephase < 0:
            raise InputError("noise rates must be non-negative", stage="evolution")
        if self.open_mode not in ("auto", "trajectories", "dense"):
            raise InputError(f"unknown open-system mode {self.open_mode!r}", stage="evolution")

    @property
    def noisy(self) -> bool:
        return self.gamma_decay > 0 or self.gamma_dephase > 0


@dataclass
class QuantumState:
    kind: str
    num_atoms: int
    basis: np.ndarray
    vector: Optional[np.ndarray] = None
    trajectories: List[np.ndarray] = field(default_factory=list)
    rho: Optional[np.ndarray] = None

    def probabilities(self) -> np.ndarray:
        """Measurement probabilities over the basis"""
        if self.kind == "pure":
            p = np.abs(self.vector) ** 2
        elif self.kind == "ensemble":
            p = np.mean([np.abs(v) ** 2 for v in self.trajectories], axis=0)
        else:
            p = np.real(np.diag(self.rho))
        p = np.clip(p, 0.0, None)
        return p / p.sum()

    def norm(self) -> float:
        if self.kind == "pure":
            return float(np.linalg.norm(self.vector))
        if self.kind == "ensemble":
            return float(np.mean([np.linalg.norm(v) for v in self.trajectories]))
        return float(np.real(np.trace(self.rho)))

    def to_dict(self, threshold: float = 1e-4) -> Dict:
        n = self.num_atoms
        p = self.probabilities()
        return {
            "kind": self.kind,
            "num_atoms": n,
            "probabilities": {
                format_config(int(c), n): float(q) for c, q in zip(self.basis, p) if q >= threshold
            },
        }


def format_config(config: int, num_atoms: int) -> str:
    """Fixed-width bitstring, atom 0 leftmost"""
    return "".join("1" if config >> i & 1 else "0" for i in range(num_atoms))


def _initial_vector(h: Operator, initial: Optional[np.ndarray]) -> np.ndarray:
    if initial is not None:
        psi = np.asarray(initial, dtype=complex)
        if psi.shape != (h.dim,):
            raise InputError(f"initial state has shape {psi.shape}, basis has {h.dim} states", stage="evolution")
        return psi / np.linalg.norm(psi)
    psi = np.zeros(h.dim, dtype=complex)
    psi[np.searchsorted(h.basis, 0)] = 1.0
    return psi


def _check_norm(value: float, what: str) -> None:
    if not np.isfinite(value) or abs(value - 1.0) > NORM_TOLERANCE:
        raise NumericalError(f"{what} drifted to {value:.3e}", stage="evolution")


def evolve(
    h_builder: HamiltonianBuilder,
    schedule: Schedule,
    options: Optional[SimOptions] = None,
    initial: Optional[np.ndarray] = None,
) -> QuantumState:
    """Integrate the Schroedinger equation along the schedule starting from |0...0>"""
    options = options or SimOptions()
    h0 = h_builder(schedule.drive_at(0.0))
    psi = _initial_vector(h0, initial)

    if options.method == "adaptive":
        total = schedule.total_time

        def rhs(t, y):
            return -1j * h_builder(schedule.drive_at(t)).apply(y)

        result = solve_ivp(rhs, (0.0, total), psi, method="DOP853", rtol=options.rtol, atol=options.atol)
        if not result.success:
            raise NumericalError(f"adaptive integrator failed: {result.message}", stage="evolution")
        psi = result.y[:, -1]
    else:
        for t_mid, h in schedule.steps(options.dt):
            H = h_builder(schedule.drive_at(t_mid)).matrix
            psi = expm_multiply(-1j * h * H, psi)

    _check_norm(float(np.linalg.norm(psi)), "state norm")
    return QuantumState("pure", h0.num_atoms, h0.basis, vector=psi)


def _jump_operators(parts: HamiltonianParts, options: SimOptions) -> List[sp.csr_matrix]:
    jumps: List[sp.csr_matrix] = []
    if options.gamma_decay > 0:
        jumps += [math.sqrt(options.gamma_decay) * L for L in parts.lowering_operators()]
    if options.gamma_dephase > 0:
        # sigma^z = 1 - 2n, off-diagonal coherences decay at gamma_dephase
        amplitude = math.sqrt(options.gamma_dephase / 2.0)
        jumps += [amplitude * sp.diags(1.0 - 2.0 * n).tocsr() for n in parts.number_operators()]
    return jumps


def _trajectory(
    parts: HamiltonianParts,
    schedule: Schedule,
    options: SimOptions,
    jumps: List[sp.csr_matrix],
    seed: int,
) -> np.ndarray:
    """One quantum-jump unravelling: non-Hermitian steps, jump when the norm falls below a uniform draw"""
    rng = np.random.default_rng(seed)
    decay = sum((L.getH() @ L) for L in jumps) if jumps else sp.csr_matrix((parts.basis.size,) * 2)
    psi = _initial_vector(parts.at(schedule.drive_at(0.0)), None)
    threshold = rng.random()
    for t_mid, h in schedule.steps(options.dt):
        H_eff = parts.at(schedule.drive_at(t_mid)).matrix - 0.5j * decay
        psi = expm_multiply(-1j * h * H_eff, psi)
        if np.vdot(psi, psi).real > threshold:
            continue
        weights = np.array([np.linalg.norm(L @ psi) ** 2 for L in jumps])
        k = int(rng.choice(len(jumps), p=weights / weights.sum()))
        psi = jumps[k] @ psi
        psi /= np.linalg.norm(psi)
        threshold = rng.random()
    return psi / np.linalg.norm(psi)


def _lindblad(parts: HamiltonianParts, schedule: Schedule, options: SimOptions, jumps: List[sp.csr_matrix]):
    dim = parts.basis.size
    Ls = [L.toarray() for L in jumps]
    LdL = sum((L.conj().T @ L for L in Ls), np.zeros((dim, dim)))

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        H = parts.at(schedule.drive_at(t)).to_dense()
        out = -1j * (H @ rho - rho @ H)
        for L in Ls:
            out += L @ rho @ L.conj().T
        out -= 0.5 * (LdL @ rho + rho @ LdL)
        return out.ravel()

    rho0 = np.zeros((dim, dim), dtype=complex)
    start = np.searchsorted(parts.basis, 0)
    rho0[start, start] = 1.0
    result = solve_ivp(
        rhs, (0.0, schedule.total_time), rho0.ravel(), method="DOP853", rtol=options.rtol, atol=options.atol
    )
    if not result.success:
        raise NumericalError(f"master-equation integration failed: {result.message}", stage="evolution")
    rho = result.y[:, -1].reshape(dim, dim)
    return 0.5 * (rho + rho.conj().T)


def evolve_open(parts: HamiltonianParts, schedule: Schedule, options: SimOptions) -> QuantumState:
    """Noisy sweep with per-atom decay and dephasing, as trajectories or a dense master equation"""
    jumps = _jump_operators(parts, options)
    mode = options.open_mode
    if mode == "auto":
        mode = "dense" if parts.num_atoms <= 3 else "trajectories"

    if mode == "dense":
        if parts.num_atoms > MAX_DENSE_ATOMS:
            raise InputError(
                f"density-matrix mode supports at most {MAX_DENSE_ATOMS} atoms, got {parts.num_atoms}",
                stage="evolution",
            )
        rho = _lindblad(parts, schedule, options, jumps)
        if abs(np.trace(rho).real - 1.0) > NORM_TOLERANCE:
            raise NumericalError(f"density matrix trace drifted to {np.trace(rho).real:.3e}", stage="evolution")
        return QuantumState("density", parts.num_atoms, parts.basis, rho=rho)

    count = max(1, options.trajectories)
    seeds = [options.seed + index for index in range(count)]
    with ThreadPoolExecutor(max_workers=max(1, options.workers)) as pool:
        states = list(pool.map(lambda s: _trajectory(parts, schedule, options, jumps, s), seeds))
    logger.debug("ran %d trajectories with %d jump channels", count, len(jumps))
    return QuantumState("ensemble", parts.num_atoms, parts.basis, trajectories=states)


def _vector_in(basis: np.ndarray, reference: GroundState) -> np.ndarray:
    """Reference amplitudes re-expressed in another basis"""
    if reference.basis.size == basis.size and np.array_equal(reference.basis, basis):
        return reference.state.astype(complex)
    out = np.zeros(basis.size, dtype=complex)
    position = np.searchsorted(basis, reference.basis)
    inside = position < basis.size
    inside[inside] = basis[position[inside]] == reference.basis[inside]
    if not np.all(inside[np.abs(reference.state) > 0]):
        raise InputError("reference state lives outside the simulated basis", stage="evolution")
    out[position[inside]] = reference.state[inside]
    return out


def fidelity(
    state: QuantumState,
    reference: Union[GroundState, Sequence[GroundState]],
    convention: str = "manifold",
) -> float:
    """Overlap with a reference state, or with the projector onto a reference manifold"""
    references = [reference] if isinstance(reference, GroundState) else list(reference)
    if not references:
        raise InputError("empty reference manifold", stage="evolution")
    if any(r.num_atoms != state.num_atoms for r in references):
        raise InputError("reference and state have different atom counts", stage="evolution")
    if convention == "single":
        references = references[:1]
    elif convention != "manifold":
        raise InputError(f"unknown fidelity convention {convention!r}", stage="evolution")

    Q, _ = np.linalg.qr(np.stack([_vector_in(state.basis, r) for r in references], axis=1))
    if state.kind == "pure":
        value = float(np.sum(np.abs(Q.conj().T @ state.vector) ** 2))
    elif state.kind == "ensemble":
        value = float(np.mean([np.sum(np.abs(Q.conj().T @ v) ** 2) / np.vdot(v, v).real for v in state.trajectories]))
    else:
        value = float(np.real(np.trace(Q.conj().T @ state.rho @ Q)))
    return min(max(value, 0.0), 1.0)


def final_ground_state(parts: HamiltonianParts, schedule: Schedule) -> GroundState:
    """Ground state of the simulated model at the end of the schedule, the single-state fidelity reference"""
    end = schedule.drive_at(schedule.total_time)
    return ground_state(parts.at(DriveParams(0.0, end.delta)))[0]


@dataclass
class GapScan:
    times: List[float]
    gaps: List[float]
    manifold_sizes: List[int]

    @property
    def min_gap(self) -> float:
        return min(self.gaps)

    @property
    def argmin_time(self) -> float:
        return self.times[int(np.argmin(self.gaps))]

    def to_dict(self) -> Dict:
        return {
            "min_gap_mhz": self.min_gap / (2 * np.pi),
            "min_gap_time_us": self.argmin_time,
            "points": [
                {"time_us": t, "gap_mhz": g / (2 * np.pi), "manifold": m}
                for t, g, m in zip(self.times, self.gaps, self.manifold_sizes)
            ],
        }


def gap_scan(
    h_builder: HamiltonianBuilder, schedule: Schedule, num_points: int = 41, degeneracy_tol: float = 1e-9
) -> GapScan:
    """Instantaneous gap between the ground manifold and the next level along the schedule"""
    times, gaps, sizes = [], [], []
    for t in np.linspace(0.0, schedule.total_time, num_points):
        h = h_builder(schedule.drive_at(float(t)))
        if h.num_atoms > MAX_GAP_ATOMS:
            raise NumericalError(f"gap scans support at most {MAX_GAP_ATOMS} atoms", stage="evolution")
        values = spectrum(h)
        scale = max(1.0, abs(values[0]))
        outside = np.nonzero(values - values[0] > degeneracy_tol * scale)[0]
        if outside.size == 0:
            continue
        times.append(float(t))
        gaps.append(float(values[outside[0]] - values[0]))
        sizes.append(int(outside[0]))
    if not gaps:
        raise NumericalError("spectrum is fully degenerate along the schedule", stage="evolution")
    return GapScan(times, gaps, sizes)


@dataclass
class AlphaPoint:
    alpha: float
    residual_mean_mhz: float
    fidelity_manifold: float
    fidelity_single: float


def alpha_sweep(
    embedding: Embedding,
    alphas: Sequence[float],
    schedule: Schedule,
    options: Optional[SimOptions] = None,
    c6: float = DEFAULT_C6,
    hinge_spec: Optional[Sequence[Hinge]] = None,
) -> List[AlphaPoint]:
    """Van der Waals sweeps over rotated copies of an embedding.

    fidelity_manifold projects onto the maximum independent sets; fidelity_single is the overlap
    with the van der Waals ground state of the rotated geometry at the end of the schedule.
    """
    points = []
    delta_end = schedule.segments[-1].delta[1]
    for alpha in alphas:
        rotated = transform_alpha(embedding, float(alpha), hinge_spec)
        parts = build_parts(rotated, VdW(c6))
        state = evolve(parts.at, schedule, options)
        reference = reference_manifold(rotated, delta=delta_end)
        single = final_ground_state(parts, schedule)
        point = AlphaPoint(
            alpha=float(alpha),
            residual_mean_mhz=residual_stats(rotated, c6).mean_mhz,
            fidelity_manifold=fidelity(state, reference, "manifold"),
            fidelity_single=fidelity(state, single, "single"),
        )
        logger.info(
            "alpha=%.2f residual %.3f MHz fidelity %.4f (single %.4f)",
            point.alpha,
            point.residual_mean_mhz,
            point.fidelity_manifold,
            point.fidelity_single,
        )
        points.append(point)
    return points


def write_alpha_csv(points: Sequence[AlphaPoint], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["alpha", "residual_mean_mhz", "fidelity_manifold", "fidelity_single"])
        for p in points:
            writer.writerow([p.alpha, f"{p.residual_mean_mhz:.6f}", f"{p.fidelity_manifold:.6f}", f"{p.fidelity_single:.6f}"])
