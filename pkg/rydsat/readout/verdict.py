"""Configuration classes and the satisfiability verdict."""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from ..atoms.embedding import Wire
from ..errors import InputError
from ..sat.reduction import MisGraph
from .measurement import Distribution

SOLUTION = "solution"
INDEPENDENT = "independent"
BLOCKADE = "blockade"
CLASSES = (SOLUTION, INDEPENDENT, BLOCKADE)

RAW = "raw"
RENORMALIZED = "renormalized"


def _expected_length(g: MisGraph, wires: Sequence[Wire]) -> int:
    return g.num_vertices + sum(w.length for w in wires)


def classify(config: str, g: MisGraph, wires: Sequence[Wire] = ()) -> str:
    """solution: one literal per clause forming an independent set; blockade: an edged pair both excited"""
    if len(config) != _expected_length(g, wires):
        raise InputError(
            f"configuration has {len(config)} bits, expected {_expected_length(g, wires)}", stage="readout"
        )
    literal = config[: g.num_vertices]
    if any(literal[u] == "1" and literal[v] == "1" for u, v in g.edge_pairs()):
        return BLOCKADE
    per_clause = [sum(literal[i] == "1" for i in members) for members in g.clause_members()]
    return SOLUTION if all(k == 1 for k in per_clause) else INDEPENDENT


def clause_label(config: str, g: MisGraph, wires: Sequence[Wire] = ()) -> str:
    """Literal bits grouped per clause, e.g. 001;01;001, wire bits after a bar"""
    label = ";".join("".join(config[i] for i in members) for members in g.clause_members())
    if wires:
        label += "|" + ",".join("".join(config[a] for a in w.chain) for w in wires)
    return label


@dataclass
class Verdict:
    solution_mass: float
    satisfiable: bool
    threshold: float
    accounting: str
    class_mass: Dict[str, float]
    classes: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "solution_mass": self.solution_mass,
            "satisfiable": self.satisfiable,
            "threshold": self.threshold,
            "accounting": self.accounting,
            "class_mass": self.class_mass,
        }


def solution_mass(
    dist: Distribution,
    g: MisGraph,
    wires: Sequence[Wire] = (),
    threshold: float = 0.5,
    accounting: str = RAW,
) -> Verdict:
    if accounting not in (RAW, RENORMALIZED):
        raise InputError(f"unknown accounting mode {accounting!r}", stage="readout")
    if not 0.0 <= threshold <= 1.0:
        raise InputError(f"threshold must lie in [0, 1], got {threshold}", stage="readout")

    classes = {config: classify(config, g, wires) for config in dist.probabilities}
    mass = {name: 0.0 for name in CLASSES}
    for config, p in dist.probabilities.items():
        mass[classes[config]] += p

    p = mass[SOLUTION]
    if accounting == RENORMALIZED:
        kept = 1.0 - mass[BLOCKADE]
        p = p / kept if kept > 0 else 0.0
    p = min(max(p, 0.0), 1.0)
    return Verdict(p, p >= threshold, threshold, accounting, mass, classes)


def bar_rows(
    dist: Distribution,
    g: MisGraph,
    wires: Sequence[Wire] = (),
    top: Optional[int] = None,
    hide_blockade: bool = False,
) -> List[Dict]:
    rows = []
    for config, p in sorted(dist.probabilities.items(), key=lambda kv: (-kv[1], kv[0])):
        kind = classify(config, g, wires)
        if hide_blockade and kind == BLOCKADE:
            continue
        rows.append({"configuration": config, "label": clause_label(config, g, wires), "probability": p, "class": kind})
    return rows[:top] if top else rows


def bars_csv(
    dist: Distribution,
    g: MisGraph,
    wires: Sequence[Wire],
    path: Union[str, Path],
    top: Optional[int] = None,
    hide_blockade: bool = False,
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=["configuration", "label", "probability", "class"])
        writer.writeheader()
        for row in bar_rows(dist, g, wires, top, hide_blockade):
            writer.writerow({**row, "probability": f"{row['probability']:.8f}"})
