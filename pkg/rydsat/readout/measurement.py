"""Projective readout with SPAM bit flips, EM unfolding and wire postselection.

Configurations are fixed-width bitstrings with atom 0 leftmost.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..atoms.embedding import Wire
from ..atoms.evolution import QuantumState, format_config
from ..errors import InputError, NumericalError
from ..utils.logger import logger

DEFAULT_P10 = 0.039
DEFAULT_P01 = 0.079
MAX_UNFOLD_ATOMS = 20
_SHOT_BLOCK = 1 << 16


def parse_config(bits: str) -> int:
    return sum(1 << i for i, b in enumerate(bits) if b == "1")


@dataclass(frozen=True)
class ConfusionModel:
    p_1_given_0: float = DEFAULT_P10
    p_0_given_1: float = DEFAULT_P01
    per_atom: Mapping[int, Tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for p in [self.p_1_given_0, self.p_0_given_1, *(q for pair in self.per_atom.values() for q in pair)]:
            if not 0.0 <= p < 1.0:
                raise InputError(f"flip probabilities must lie in [0, 1), got {p}", stage="readout")

    @classmethod
    def identity(cls) -> "ConfusionModel":
        return cls(0.0, 0.0)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "ConfusionModel":
        """Calibration file: {"p_1_given_0": .., "p_0_given_1": .., "per_atom": {"3": [p10, p01]}}"""
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            per_atom = {int(k): (float(v[0]), float(v[1])) for k, v in data.get("per_atom", {}).items()}
            return cls(
                float(data.get("p_1_given_0", DEFAULT_P10)), float(data.get("p_0_given_1", DEFAULT_P01)), per_atom
            )
        except (OSError, ValueError, TypeError, IndexError) as e:
            raise InputError(f"cannot read confusion calibration {path}: {e}", stage="readout")

    def rates(self, num_atoms: int) -> Tuple[np.ndarray, np.ndarray]:
        p10 = np.full(num_atoms, self.p_1_given_0)
        p01 = np.full(num_atoms, self.p_0_given_1)
        for atom, (a, b) in self.per_atom.items():
            if atom < num_atoms:
                p10[atom], p01[atom] = a, b
        return p10, p01

    def matrices(self, num_atoms: int) -> List[np.ndarray]:
        """Per-atom P(observed | true), indexed [observed, true]"""
        p10, p01 = self.rates(num_atoms)
        return [np.array([[1 - a, b], [a, 1 - b]]) for a, b in zip(p10, p01)]

    def to_dict(self) -> Dict:
        return {
            "p_1_given_0": self.p_1_given_0,
            "p_0_given_1": self.p_0_given_1,
            "per_atom": {str(k): list(v) for k, v in self.per_atom.items()},
        }


@dataclass
class Counts:
    num_atoms: int
    counts: Dict[str, int]
    retention: float = 1.0

    def __post_init__(self):
        for key, value in self.counts.items():
            if len(key) != self.num_atoms or set(key) - {"0", "1"}:
                raise InputError(f"bad configuration key {key!r}", stage="readout")
            if value < 0:
                raise InputError(f"negative count for {key}", stage="readout")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def frequencies(self) -> Dict[str, float]:
        total = self.total
        return {k: v / total for k, v in self.counts.items()} if total else {}

    def to_dict(self) -> Dict:
        return {
            "num_atoms": self.num_atoms,
            "total": self.total,
            "retention": self.retention,
            "counts": dict(sorted(self.counts.items())),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Counts":
        return cls(int(data["num_atoms"]), {k: int(v) for k, v in data["counts"].items()}, data.get("retention", 1.0))


@dataclass
class Distribution:
    num_atoms: int
    probabilities: Dict[str, float]
    converged: bool = True
    iterations: int = 0
    log_likelihood: List[float] = field(default_factory=list)

    def __post_init__(self):
        values = np.array(list(self.probabilities.values()), dtype=float)
        if values.size and (values.min() < 0 or abs(values.sum() - 1.0) > 1e-9):
            raise InputError("probabilities must be non-negative and sum to 1", stage="readout")

    def get(self, config: str) -> float:
        return self.probabilities.get(config, 0.0)

    def total_variation(self, other: "Distribution") -> float:
        keys = set(self.probabilities) | set(other.probabilities)
        return 0.5 * sum(abs(self.get(k) - other.get(k)) for k in keys)

    def to_dict(self) -> Dict:
        return {
            "num_atoms": self.num_atoms,
            "converged": self.converged,
            "iterations": self.iterations,
            "probabilities": dict(sorted(self.probabilities.items(), key=lambda kv: (-kv[1], kv[0]))),
        }

    @classmethod
    def from_state(cls, state: QuantumState, threshold: float = 0.0) -> "Distribution":
        p = state.probabilities()
        keep = p > threshold
        p = p[keep] / p[keep].sum()
        return cls(state.num_atoms, {format_config(int(c), state.num_atoms): float(q) for c, q in zip(state.basis[keep], p)})

    @classmethod
    def from_counts(cls, counts: Counts) -> "Distribution":
        if counts.total == 0:
            raise InputError("no shots to normalise", stage="readout")
        return cls(counts.num_atoms, counts.frequencies())


def sample(
    source: Union[QuantumState, Distribution],
    shots: int,
    confusion: Optional[ConfusionModel] = None,
    seed: int = 0,
) -> Counts:
    """Draw ideal configurations then flip each bit independently per the confusion model"""
    if shots < 1:
        raise InputError("need at least one shot", stage="readout")
    confusion = confusion or ConfusionModel.identity()

    if isinstance(source, QuantumState):
        n, configs, probs = source.num_atoms, source.basis, source.probabilities()
    else:
        n = source.num_atoms
        configs = np.array([parse_config(k) for k in source.probabilities], dtype=np.int64)
        probs = np.array(list(source.probabilities.values()), dtype=float)
    probs = probs / probs.sum()
    p10, p01 = confusion.rates(n)

    tallies: Dict[int, int] = {}
    blocks = -(-shots // _SHOT_BLOCK)
    for index, child in enumerate(np.random.SeedSequence(seed).spawn(blocks)):
        rng = np.random.default_rng(child)
        size = min(_SHOT_BLOCK, shots - index * _SHOT_BLOCK)
        drawn = rng.choice(configs, size=size, p=probs)
        bits = (drawn[:, None] >> np.arange(n)[None, :]) & 1
        flip_prob = np.where(bits == 1, p01[None, :], p10[None, :])
        observed = bits ^ (rng.random(bits.shape) < flip_prob)
        values = observed @ (np.int64(1) << np.arange(n, dtype=np.int64))
        for value, count in zip(*np.unique(values, return_counts=True)):
            tallies[int(value)] = tallies.get(int(value), 0) + int(count)
    return Counts(n, {format_config(c, n): k for c, k in sorted(tallies.items())})


def apply_channel(vector: np.ndarray, matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Apply a product of per-atom 2x2 maps to a 2^N vector (atom i is bit i)"""
    n = len(matrices)
    tensor = vector.reshape((2,) * n)
    for atom, m in enumerate(matrices):
        axis = n - 1 - atom
        tensor = np.moveaxis(np.tensordot(m, tensor, axes=([1], [axis])), 0, axis)
    return tensor.reshape(-1)


def mle(
    counts: Counts,
    confusion: ConfusionModel,
    tolerance: float = 1e-8,
    max_iterations: int = 1000,
) -> Distribution:
    """Multinomial maximum-likelihood estimate of the pre-readout distribution by expectation-maximisation"""
    n = counts.num_atoms
    if counts.total < 1:
        raise InputError("need at least one shot", stage="readout")
    if n > MAX_UNFOLD_ATOMS:
        raise NumericalError(f"unfolding supports at most {MAX_UNFOLD_ATOMS} atoms", stage="readout")

    dim = 1 << n
    observed = np.zeros(dim)
    for key, value in counts.counts.items():
        observed[parse_config(key)] += value
    frequency = observed / observed.sum()
    forward = confusion.matrices(n)
    backward = [m.T for m in forward]

    p = np.full(dim, 1.0 / dim)
    history: List[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        q = apply_channel(p, forward)
        support = observed > 0
        history.append(float(np.sum(observed[support] * np.log(q[support]))))
        ratio = np.zeros(dim)
        ratio[support] = frequency[support] / q[support]
        updated = p * apply_channel(ratio, backward)
        updated /= updated.sum()
        change = 0.5 * np.abs(updated - p).sum()
        p = updated
        if change < tolerance:
            converged = True
            break

    q = apply_channel(p, forward)
    support = observed > 0
    history.append(float(np.sum(observed[support] * np.log(q[support]))))
    if not converged:
        logger.warning("EM unfolding stopped after %d iterations without converging", iterations)

    keep = p > 1e-12
    p = np.where(keep, p, 0.0)
    p /= p.sum()
    return Distribution(
        n,
        {format_config(int(c), n): float(p[c]) for c in np.nonzero(keep)[0]},
        converged=converged,
        iterations=iterations,
        log_likelihood=history,
    )


def chain_is_alternating(bits: str, chain: Sequence[int]) -> bool:
    return all(bits[a] != bits[b] for a, b in zip(chain, chain[1:]))


def postselect_wires(counts: Counts, wires: Sequence[Wire]) -> Counts:
    """Keep shots whose wire chains are all antiferromagnetic"""
    if not wires:
        return Counts(counts.num_atoms, dict(counts.counts), counts.retention)
    for wire in wires:
        if any(atom >= counts.num_atoms for atom in wire.chain):
            raise InputError(f"wire {wire.wire_id} addresses atoms outside the shot records", stage="readout")

    kept = {k: v for k, v in counts.counts.items() if all(chain_is_alternating(k, w.chain) for w in wires)}
    total = counts.total
    survived = sum(kept.values())
    retention = survived / total if total else 0.0
    if survived == 0:
        logger.warning("wire postselection kept no shots out of %d", total)
    else:
        logger.info("wire postselection kept %d of %d shots (%.1f%%)", survived, total, 100 * retention)
    return Counts(counts.num_atoms, kept, retention * counts.retention)
