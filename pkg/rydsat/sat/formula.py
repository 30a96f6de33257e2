"""CNF data model, DIMACS reading/writing and the brute-force satisfiability oracle.

Only clauses of one to three literals are accepted; anything wider is rejected
instead of being split.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from ..errors import DimacsError, EmptyClauseError, InputError, NumericalError
from ..utils.logger import logger

MAX_CLAUSE_WIDTH = 3
MAX_ENUMERATION_VARIABLES = 24
_CHUNK_BITS = 16


@dataclass(frozen=True, order=True)
class Literal:
    variable: int
    negated: bool = False

    def __post_init__(self):
        if self.variable < 1:
            raise InputError(f"literal variable must be >= 1, got {self.variable}", stage="formula")

    def negation(self) -> "Literal":
        return Literal(self.variable, not self.negated)

    def to_int(self) -> int:
        return -self.variable if self.negated else self.variable

    @classmethod
    def from_int(cls, value: int) -> "Literal":
        if value == 0:
            raise InputError("0 is a clause terminator, not a literal", stage="formula")
        return cls(abs(value), value < 0)

    def label(self) -> str:
        return f"~x{self.variable}" if self.negated else f"x{self.variable}"


@dataclass(frozen=True)
class Clause:
    literals: Tuple[Literal, ...]

    def __post_init__(self):
        if not self.literals:
            raise EmptyClauseError("empty clause")
        if len(self.literals) > MAX_CLAUSE_WIDTH:
            raise DimacsError(f"clause has {len(self.literals)} literals, at most {MAX_CLAUSE_WIDTH} allowed")
        if len(set(self.literals)) != len(self.literals):
            raise InputError("clause contains a duplicate literal", stage="formula")

    def __len__(self) -> int:
        return len(self.literals)

    def is_tautology(self) -> bool:
        return any(lit.negation() in self.literals for lit in self.literals)


@dataclass(frozen=True)
class Formula:
    num_variables: int
    clauses: Tuple[Clause, ...]

    def __post_init__(self):
        if self.num_variables < 1:
            raise InputError("formula needs at least one variable", stage="formula")
        if not self.clauses:
            raise InputError("formula needs at least one clause", stage="formula")
        for clause in self.clauses:
            for lit in clause.literals:
                if lit.variable > self.num_variables:
                    raise InputError(
                        f"variable {lit.variable} exceeds declared count {self.num_variables}", stage="formula"
                    )

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @classmethod
    def from_lists(cls, num_variables: int, clauses: Iterable[Iterable[int]]) -> "Formula":
        """Build from signed-integer clause lists, e.g. [[1, 2, 3], [-1, 4]]"""
        built = tuple(Clause(tuple(Literal.from_int(v) for v in clause)) for clause in clauses)
        return cls(num_variables, built)

    def to_lists(self) -> List[List[int]]:
        return [[lit.to_int() for lit in clause.literals] for clause in self.clauses]


@dataclass(frozen=True)
class Assignment:
    values: Tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.values)

    def value(self, variable: int) -> bool:
        return self.values[variable - 1]

    def satisfies(self, lit: Literal) -> bool:
        return self.value(lit.variable) != lit.negated

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "Assignment":
        return cls(tuple(bool(b) for b in bits))

    def to_bits(self) -> str:
        return "".join("1" if v else "0" for v in self.values)


@dataclass
class SatResult:
    satisfiable: bool
    count: int
    witness: Optional[Assignment] = None

    def to_dict(self) -> Dict:
        return {
            "satisfiable": self.satisfiable,
            "count": self.count,
            "witness": self.witness.to_bits() if self.witness else None,
        }


def _normalize_clause(values: List[int], line_number: int) -> Clause:
    literals: List[Literal] = []
    for value in values:
        lit = Literal.from_int(value)
        if lit in literals:
            logger.warning("line %d: duplicate literal %s removed", line_number, lit.label())
            continue
        literals.append(lit)

    if len(literals) > MAX_CLAUSE_WIDTH:
        raise DimacsError(
            f"clause has {len(literals)} literals; only 3-SAT clauses are supported", line_number
        )
    clause = Clause(tuple(literals))
    if clause.is_tautology():
        logger.warning("line %d: tautological clause %s accepted", line_number, [item.label() for item in literals])
    return clause


def parse_dimacs(text: str) -> Formula:
    """Parse DIMACS CNF text (LF or CRLF) into a Formula"""
    num_variables: Optional[int] = None
    num_clauses: Optional[int] = None
    clauses: List[Clause] = []
    current: List[int] = []
    current_line = 0

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if num_variables is not None:
                raise DimacsError("duplicate header", line_number)
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed header {line!r}", line_number)
            try:
                num_variables, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed header {line!r}", line_number)
            if num_variables < 1 or num_clauses < 1:
                raise DimacsError("header counts must be positive", line_number)
            continue

        if num_variables is None:
            raise DimacsError("clause before 'p cnf' header", line_number)

        for token in line.split():
            try:
                value = int(token)
            except ValueError:
                raise DimacsError(f"bad token {token!r}", line_number)
            if value == 0:
                if not current:
                    raise EmptyClauseError("empty clause", line_number)
                clauses.append(_normalize_clause(current, current_line))
                current = []
                continue
            if abs(value) > num_variables:
                raise DimacsError(f"variable {abs(value)} exceeds declared count {num_variables}", line_number)
            if not current:
                current_line = line_number
            current.append(value)

    if num_variables is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        # tolerate a missing final terminator
        clauses.append(_normalize_clause(current, current_line))
    if len(clauses) != num_clauses:
        raise DimacsError(f"header declares {num_clauses} clauses, found {len(clauses)}")

    return Formula(num_variables, tuple(clauses))


def serialize_dimacs(formula: Formula, comments: Iterable[str] = ()) -> str:
    """Canonical DIMACS writer (LF line endings, one clause per line)"""
    lines = [f"c {comment}" for comment in comments]
    lines.append(f"p cnf {formula.num_variables} {formula.num_clauses}")
    for clause in formula.clauses:
        lines.append(" ".join(str(lit.to_int()) for lit in clause.literals) + " 0")
    return "\n".join(lines) + "\n"


def load_formula(path: Union[str, Path]) -> Formula:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}", stage="formula")
    return parse_dimacs(text)


def evaluate(formula: Formula, assignment: Assignment) -> bool:
    if len(assignment) != formula.num_variables:
        raise InputError(
            f"assignment has {len(assignment)} values, formula has {formula.num_variables} variables",
            stage="formula",
        )
    return all(any(assignment.satisfies(lit) for lit in clause.literals) for clause in formula.clauses)


def _clause_masks(formula: Formula, bits: np.ndarray) -> np.ndarray:
    """Truth table rows for a chunk of assignments; column k-1 is variable k"""
    satisfied = np.ones(bits.shape[0], dtype=bool)
    for clause in formula.clauses:
        clause_true = np.zeros(bits.shape[0], dtype=bool)
        for lit in clause.literals:
            column = bits[:, lit.variable - 1]
            clause_true |= ~column if lit.negated else column
        satisfied &= clause_true
    return satisfied


def brute_force_sat(formula: Formula) -> SatResult:
    """Exhaustive 2^n scan in lexicographic order (x1 most significant)"""
    n = formula.num_variables
    if n > MAX_ENUMERATION_VARIABLES:
        raise NumericalError(
            f"{n} variables exceeds the enumeration limit of {MAX_ENUMERATION_VARIABLES}", stage="formula"
        )

    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    total = 1 << n
    chunk = 1 << min(n, _CHUNK_BITS)
    count = 0
    witness: Optional[Assignment] = None

    for start in range(0, total, chunk):
        index = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((index[:, None] >> shifts[None, :]) & 1).astype(bool)
        satisfied = _clause_masks(formula, bits)
        count += int(satisfied.sum())
        if witness is None and satisfied.any():
            first = int(np.argmax(satisfied))
            witness = Assignment(tuple(bool(b) for b in bits[first]))

    return SatResult(satisfiable=count > 0, count=count, witness=witness)
