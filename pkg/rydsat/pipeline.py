"""End-to-end solve: reduce, embed, sweep, read out, decide."""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

from .atoms.embedding import Embedding, Wire, embed, load_embedding, load_fixture, residual_stats, transform_alpha
from .atoms.evolution import MAX_GAP_ATOMS, QuantumState, evolve, evolve_open, fidelity, final_ground_state, gap_scan
from .atoms.hamiltonian import HamiltonianParts, build_parts, reference_manifold
from .config import RunConfig
from .errors import InputError
from .readout.measurement import Counts, Distribution, mle, postselect_wires, sample
from .readout.verdict import RAW, RENORMALIZED, Verdict, bar_rows, solution_mass
from .sat.formula import MAX_ENUMERATION_VARIABLES, Formula, brute_force_sat
from .sat.oracle import MAX_ORACLE_VERTICES, enumerate_mis
from .sat.reduction import INTER, INTRA, MisGraph, reduce
from .utils.logger import logger, stage_timer
from .utils.sim_router import SimMethod, router

_FIXTURES = ("g1", "g2", "g3")


@dataclass
class SolveResult:
    graph: MisGraph
    embedding: Optional[Embedding]
    state: QuantumState
    counts: Counts
    postselected: Counts
    distribution: Optional[Distribution]
    verdict: Verdict
    report: Dict = field(default_factory=dict)

    @property
    def wires(self) -> Sequence[Wire]:
        return self.embedding.wires if self.embedding else ()


def graph_summary(g: MisGraph) -> Dict:
    summary = {
        "vertices": g.num_vertices,
        "intra_edges": g.count(INTRA),
        "inter_edges": g.count(INTER),
        "clauses": g.num_clauses,
    }
    if g.num_vertices <= MAX_ORACLE_VERTICES:
        alpha = enumerate_mis(g).alpha
        summary["alpha"] = alpha
        summary["mis_satisfiable"] = alpha == g.num_clauses
    return summary


def resolve_embedding(g: MisGraph, config: RunConfig) -> Embedding:
    """Shipped fixture, a saved embedding file, or a fresh layout"""
    if config.embedding:
        if config.embedding.lower() in _FIXTURES:
            e = load_fixture(config.embedding)
        else:
            e = load_embedding(config.embedding)
        if e.graph.to_dict() != g.to_dict():
            raise InputError("embedding was built for a different graph", stage="embedding")
    else:
        e = embed(
            g,
            config.geometry(),
            dimension=config.dimension,
            rng_seed=config.embed_seed,
            restarts=config.embed_restarts,
            workers=config.workers,
        )
    if config.alpha > 0:
        e = transform_alpha(e, config.alpha)
    return e


def simulate(parts: HamiltonianParts, config: RunConfig) -> QuantumState:
    options = config.sim_options()
    decision = router.route(parts.num_atoms, parts.model, options)
    logger.info("routing: %s (%s)", decision.method.value, decision.reasoning)
    if decision.method is SimMethod.PURE:
        return evolve(parts.at, config.schedule(), options)
    mode = "dense" if decision.method is SimMethod.DENSE else "trajectories"
    options = replace(options, open_mode=mode)
    return evolve_open(parts, config.schedule(), options)


def wire_endpoint_violation(dist: Distribution, g: MisGraph, wires: Sequence[Wire]) -> float:
    """Largest probability that both ends of a wired logical edge are excited"""
    worst = 0.0
    for wire in wires:
        u, v = (g.index_of(vid) for vid in wire.endpoints)
        both = sum(p for config, p in dist.probabilities.items() if config[u] == "1" and config[v] == "1")
        worst = max(worst, both)
    return worst


def solve(formula: Formula, config: RunConfig, input_name: str = "") -> SolveResult:
    report: Dict = {"input": input_name, "fingerprint": config.fingerprint()}

    with stage_timer("formula"):
        if formula.num_variables <= MAX_ENUMERATION_VARIABLES:
            report["brute_force"] = brute_force_sat(formula).to_dict()

    with stage_timer("reduce"):
        g = reduce(formula)
        report["graph"] = graph_summary(g)

    embedding: Optional[Embedding] = None
    if config.use_embedding:
        with stage_timer("embed"):
            embedding = resolve_embedding(g, config)
            report["embedding"] = {
                "atoms": embedding.num_atoms,
                "wires": len(embedding.wires),
                "dimension": embedding.dimension,
                "residual_mean_mhz": residual_stats(embedding).mean_mhz,
            }
    source: Union[MisGraph, Embedding] = embedding if embedding is not None else g

    with stage_timer("evolve"):
        parts = build_parts(source, config.interaction_model(), config.rabi_factor_list())
        state = simulate(parts, config)
        schedule = config.schedule()
        manifold = reference_manifold(source, delta=schedule.segments[-1].delta[1])
        report["fidelity"] = {
            "manifold": fidelity(state, manifold, "manifold"),
            "single": fidelity(state, final_ground_state(parts, schedule), "single"),
            "manifold_size": len(manifold),
        }
        if parts.num_atoms <= MAX_GAP_ATOMS:
            scan = gap_scan(parts.at, schedule, num_points=21)
            report["min_gap_mhz"] = scan.to_dict()["min_gap_mhz"]

    wires = embedding.wires if embedding else ()
    with stage_timer("readout"):
        exact = Distribution.from_state(state, threshold=1e-12)
        report["state_verdict"] = solution_mass(exact, g, wires, config.threshold, RAW).to_dict()

        confusion = config.confusion()
        counts = sample(state, config.shots, confusion, seed=config.sample_seed)
        selected = postselect_wires(counts, wires)
        report["readout"] = {"shots": counts.total, "kept": selected.total, "retention": selected.retention}

        if selected.total == 0:
            distribution = None
            verdict = Verdict(0.0, False, config.threshold, config.accounting, {}, {})
            report["readout"]["empty_postselection"] = True
        else:
            distribution = mle(selected, confusion)
            report["readout"]["mle_converged"] = distribution.converged
            report["readout"]["mle_iterations"] = distribution.iterations
            verdict = solution_mass(distribution, g, wires, config.threshold, config.accounting)
            report["verdict_raw"] = solution_mass(distribution, g, wires, config.threshold, RAW).to_dict()
            report["verdict_renormalized"] = solution_mass(
                distribution, g, wires, config.threshold, RENORMALIZED
            ).to_dict()
            report["wire_violation"] = wire_endpoint_violation(distribution, g, wires)
            report["top_configurations"] = bar_rows(distribution, g, wires, top=10)

    report["verdict"] = verdict.to_dict()
    logger.info(
        "verdict: %s (solution mass %.4f, %s)",
        "SAT" if verdict.satisfiable else "UNSAT",
        verdict.solution_mass,
        verdict.accounting,
    )
    return SolveResult(g, embedding, state, counts, selected, distribution, verdict, report)


def run_directory(config: RunConfig, input_path: Union[str, Path]) -> Path:
    out = Path(config.output_dir) / Path(input_path).stem
    out.mkdir(parents=True, exist_ok=True)
    return out
