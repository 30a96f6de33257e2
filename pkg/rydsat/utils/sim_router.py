from dataclasses import dataclass
from enum import Enum

from ..atoms.evolution import MAX_DENSE_ATOMS, SimOptions
from ..atoms.hamiltonian import MAX_FULL_ATOMS, MAX_SUBSPACE_ATOMS, Ideal, InteractionModel
from ..errors import InputError, NumericalError


class SimMethod(Enum):
    PURE = "pure"
    TRAJECTORIES = "trajectories"
    DENSE = "dense"


@dataclass
class RoutingDecision:
    method: SimMethod
    subspace: str
    reasoning: str = ""

    def to_dict(self):
        return {"method": self.method.value, "subspace": self.subspace, "reasoning": self.reasoning}


class SimRouter:
    """Pick the state representation and integrator family for a sweep"""

    def __init__(self, max_atoms: int = MAX_FULL_ATOMS, dense_cutoff: int = 3):
        self.max_atoms = max_atoms
        self.dense_cutoff = dense_cutoff

    def route(self, n_atoms: int, model: InteractionModel, options: SimOptions) -> RoutingDecision:
        subspace = "independent" if isinstance(model, Ideal) else "full"
        limit = MAX_SUBSPACE_ATOMS if subspace == "independent" else self.max_atoms
        if n_atoms > limit:
            raise NumericalError(f"{n_atoms} atoms exceeds the {subspace}-space limit of {limit}", stage="evolution")

        if not options.noisy:
            return RoutingDecision(SimMethod.PURE, subspace, "noiseless sweep")

        if options.open_mode == "dense" or (options.open_mode == "auto" and n_atoms <= self.dense_cutoff):
            if n_atoms > MAX_DENSE_ATOMS:
                raise InputError(
                    f"density-matrix mode supports at most {MAX_DENSE_ATOMS} atoms, got {n_atoms}", stage="evolution"
                )
            return RoutingDecision(SimMethod.DENSE, subspace, f"noisy sweep on {n_atoms} atoms, master equation")

        return RoutingDecision(
            SimMethod.TRAJECTORIES, subspace, f"noisy sweep on {n_atoms} atoms, {max(1, options.trajectories)} trajectories"
        )


router = SimRouter()
