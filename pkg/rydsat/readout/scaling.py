"""Back-of-the-envelope calculators for repetitions, atom budgets and wall time."""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from ..errors import InputError

SCALING_BASE = 1.04
DEFAULT_REP_RATE_HZ = 2.5


def success_prob(p: float, m: int) -> float:
    """1 - (1 - p)^m, evaluated in log space"""
    if not 0.0 <= p <= 1.0 or m < 0:
        raise InputError(f"need p in [0, 1] and m >= 0, got p={p}, m={m}", stage="readout")
    if p == 0.0 or m == 0:
        return 0.0
    if p == 1.0:
        return 1.0
    return -math.expm1(m * math.log1p(-p))


def repetitions_for(p: float, target: float) -> int:
    """Smallest m with success_prob(p, m) >= target"""
    if p <= 0.0:
        raise InputError("target unreachable with zero success probability", stage="readout")
    if not 0.0 < target < 1.0 or p > 1.0:
        raise InputError(f"need 0 < p <= 1 and 0 < target < 1, got p={p}, target={target}", stage="readout")
    if p == 1.0:
        return 1
    m = max(1, math.ceil(math.log1p(-target) / math.log1p(-p)))
    slack = 1e-12
    while m > 1 and success_prob(p, m - 1) >= target - slack:
        m -= 1
    while success_prob(p, m) < target - slack:
        m += 1
    return m


def scaling_estimate(n_atoms: int, base: float = SCALING_BASE) -> float:
    """Empirical solution mass p ~ base^(-N_A)"""
    if n_atoms < 0:
        raise InputError("atom count must be non-negative", stage="readout")
    return math.exp(-n_atoms * math.log(base))


@dataclass(frozen=True)
class AtomBounds:
    lower: int
    upper: int
    lower_scheme: str = "literal atoms only"
    upper_scheme: str = "crossing-lattice estimate"

    def to_dict(self) -> Dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_scheme": self.lower_scheme,
            "upper_scheme": self.upper_scheme,
        }


def atom_bounds(n_clauses: int) -> AtomBounds:
    if n_clauses < 1:
        raise InputError("need at least one clause", stage="readout")
    return AtomBounds(3 * n_clauses, 36 * n_clauses**2)


def wall_time(repetitions: int, rep_rate_hz: float = DEFAULT_REP_RATE_HZ) -> float:
    """Seconds of experiment time for the given number of repetitions"""
    if rep_rate_hz <= 0:
        raise InputError("repetition rate must be positive", stage="readout")
    return repetitions / rep_rate_hz


def clause_range(n_atoms: int) -> Tuple[int, int]:
    """Clause counts an atom budget can serve, between the crossing-lattice and literal-only schemes"""
    if n_atoms < 0:
        raise InputError("atom count must be non-negative", stage="readout")
    if n_atoms < 3:
        return 0, 0
    return math.ceil(math.sqrt(n_atoms / 36)), n_atoms // 3


def _row(n_atoms: int, target: float, rep_rate_hz: float) -> Dict:
    p = scaling_estimate(n_atoms)
    if p == 0.0:
        # underflow: beyond any realistic repetition budget
        return {"n_atoms": n_atoms, "p": 0.0, "repetitions": None, "wall_time_s": None, "wall_time_h": None, "wall_time_days": None}
    m = repetitions_for(p, target)
    seconds = wall_time(m, rep_rate_hz)
    return {
        "n_atoms": n_atoms,
        "p": p,
        "repetitions": m,
        "wall_time_s": seconds,
        "wall_time_h": seconds / 3600.0,
        "wall_time_days": seconds / 86400.0,
    }


def scaling_table(
    n_atoms: Optional[int] = None,
    n_clauses: Optional[int] = None,
    target: float = 0.2,
    rep_rate_hz: float = DEFAULT_REP_RATE_HZ,
) -> Dict:
    if n_atoms is None and n_clauses is None:
        raise InputError("give an atom count or a clause count", stage="readout")
    table: Dict = {"target": target, "rep_rate_hz": rep_rate_hz}
    if n_atoms is not None:
        table["atoms"] = _row(n_atoms, target, rep_rate_hz)
        table["clause_range"] = list(clause_range(n_atoms))
    if n_clauses is not None:
        bounds = atom_bounds(n_clauses)
        table["bounds"] = bounds.to_dict()
        table["at_lower_bound"] = _row(bounds.lower, target, rep_rate_hz)
        table["at_upper_bound"] = _row(bounds.upper, target, rep_rate_hz)
    return table
