import json
import sys
from pathlib import Path
from typing import Optional

import click

from .atoms.embedding import TWO_PI, residual_stats, save_embedding, validate_geometry, write_positions_csv
from .atoms.evolution import MAX_GAP_ATOMS, alpha_sweep, gap_scan, residual_schedule, write_alpha_csv
from .atoms.hamiltonian import DriveParams, build, build_parts, ground_state, spectrum
from .config import load_config, write_default_config
from .errors import InputError, RydsatError
from .memory.run_store import RunStore
from .pipeline import graph_summary, resolve_embedding, run_directory, simulate, solve
from .readout.measurement import ConfusionModel, Distribution, mle, postselect_wires, sample
from .readout.scaling import scaling_table
from .readout.verdict import RAW, RENORMALIZED, bars_csv, solution_mass
from .sat.formula import brute_force_sat, load_formula
from .sat.oracle import enumerate_mis
from .sat.reduction import reduce, save_graph
from .utils.logger import attach_sidecar, detach_sidecar, logger, set_console_level


class RydsatGroup(click.Group):
    """Maps pipeline errors onto exit codes"""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except RydsatError as e:
            logger.error("%s", e)
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)


def _dump(data, path: Optional[Path] = None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True)
    if path is None:
        click.echo(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def _source_embedding(cnf: Path, config_path, **overrides):
    config = load_config(config_path, input_path=str(cnf), **overrides)
    g = reduce(load_formula(cnf))
    return config, g


@click.group(cls=RydsatGroup)
@click.option("-v", "--verbose", is_flag=True, help="Log debug records to the console.")
def main(verbose: bool):
    """Compile 3-SAT instances to Rydberg-atom MIS problems and simulate them."""
    if verbose:
        set_console_level(10)


@main.command()
@click.argument("path", type=click.Path(path_type=Path), default="rydsat.cfg")
def init(path: Path):
    """Write the full default configuration."""
    write_default_config(path)
    click.echo(f"wrote {path}")


@main.command("reduce")
@click.argument("cnf", type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), help="Graph JSON destination.")
def reduce_cmd(cnf: Path, out: Optional[Path]):
    """Build the MIS graph of a DIMACS file."""
    g = reduce(load_formula(cnf))
    if out:
        save_graph(g, out)
    s = graph_summary(g)
    line = f"{s['vertices']} vertices, {s['intra_edges']} intra, {s['inter_edges']} inter"
    if "alpha" in s:
        line += f", alpha={s['alpha']}"
        if s["alpha"] < g.num_clauses:
            line += f" < N_C={g.num_clauses} => UNSAT"
    click.echo(line)


@main.command()
@click.argument("cnf", type=click.Path(exists=True, path_type=Path))
def oracle(cnf: Path):
    """Exact satisfiability and maximum independent sets."""
    formula = load_formula(cnf)
    g = reduce(formula)
    mis = enumerate_mis(g)
    _dump({"sat": brute_force_sat(formula).to_dict(), "mis": mis.to_dict(), "num_clauses": g.num_clauses})


@main.command("embed")
@click.argument("cnf", type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--fixture", type=click.Choice(["g1", "g2", "g3"]), help="Use a shipped embedding.")
@click.option("--alpha", type=float, help="Rotate clause gadgets by this fraction of their target angle.")
@click.option("--dimension", type=click.Choice(["2", "3"]))
@click.option("--seed", type=int)
@click.option("--out-dir", type=click.Path(path_type=Path))
def embed_cmd(cnf, config_path, fixture, alpha, dimension, seed, out_dir):
    """Place atoms for the MIS graph and write JSON and CSV artifacts."""
    config, g = _source_embedding(
        cnf,
        config_path,
        embedding=fixture,
        alpha=alpha,
        dimension=int(dimension) if dimension else None,
        embed_seed=seed,
        output_dir=str(out_dir) if out_dir else None,
    )
    e = resolve_embedding(g, config)
    out = run_directory(config, cnf)
    save_embedding(e, out / "embedding.json")
    write_positions_csv(e, out / "positions.csv")
    stats = residual_stats(e)
    _dump(
        {
            "atoms": e.num_atoms,
            "wires": len(e.wires),
            "dimension": e.dimension,
            "residual_mean_mhz": stats.mean_mhz,
            "residual_max_mhz": stats.max_mhz,
            "violations": [str(v) for v in validate_geometry(e)],
            "artifacts": str(out),
        }
    )


@main.command()
@click.argument("cnf", type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--embedding", "embedding_path", help="Fixture name or embedding JSON; the bare graph otherwise.")
@click.option("--model", type=click.Choice(["ideal", "graph", "vdw"]))
@click.option("--omega-mhz", type=float, default=0.0, show_default=True)
@click.option("--delta-mhz", type=float, default=2.0, show_default=True)
@click.option("--levels", type=int, default=8, show_default=True)
def hamiltonian(cnf, config_path, embedding_path, model, omega_mhz, delta_mhz, levels):
    """Lowest levels of the Hamiltonian at a fixed drive, as CSV."""
    config, g = _source_embedding(cnf, config_path, model=model, embedding=embedding_path)
    source = resolve_embedding(g, config) if embedding_path else g
    h = build(source, config.interaction_model(), DriveParams(TWO_PI * omega_mhz, TWO_PI * delta_mhz))
    values = spectrum(h, lowest=levels)[:levels]
    ground = ground_state(h)
    click.echo("level,energy_mhz")
    for k, value in enumerate(values):
        click.echo(f"{k},{value / TWO_PI:.9f}")
    click.echo(f"# ground manifold size {len(ground)}", err=True)


@main.command("evolve")
@click.argument("cnf", type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--embedding", "embedding_path")
@click.option("--total-time", type=float, help="Sweep duration in us.")
@click.option("--alpha-sweep", "alphas_text", help="Comma-separated alphas; runs van der Waals sweeps on rotated copies.")
@click.option("--residual-drive", is_flag=True, help="Sweep the alphas with the residual-sensitive drive instead of the configured one.")
@click.option("--out-dir", type=click.Path(path_type=Path))
def evolve_cmd(cnf, config_path, embedding_path, total_time, alphas_text, residual_drive, out_dir):
    """Run the sweep and write the final-state probabilities and gap scan."""
    config, g = _source_embedding(
        cnf,
        config_path,
        embedding=embedding_path,
        total_time_us=total_time,
        output_dir=str(out_dir) if out_dir else None,
    )
    out = run_directory(config, cnf)

    if alphas_text:
        e = resolve_embedding(g, config)
        alphas = [float(a) for a in alphas_text.split(",")]
        schedule = residual_schedule(config.total_time_us) if residual_drive else config.schedule()
        points = alpha_sweep(e, alphas, schedule, config.sim_options(), c6=TWO_PI * config.c6_mhz_um6)
        write_alpha_csv(points, out / "alpha_sweep.csv")
        _dump([p.__dict__ for p in points])
        return

    source = resolve_embedding(g, config) if config.use_embedding else g
    parts = build_parts(source, config.interaction_model(), config.rabi_factor_list())
    state = simulate(parts, config)
    _dump(state.to_dict(threshold=1e-12), out / "state.json")
    summary = {"num_atoms": state.num_atoms, "norm": state.norm(), "state": str(out / "state.json")}
    if parts.num_atoms <= MAX_GAP_ATOMS:
        scan = gap_scan(parts.at, config.schedule(), num_points=21)
        with open(out / "gaps.csv", "w", encoding="utf-8") as handle:
            handle.write("time_us,gap_mhz\n")
            for t, gap in zip(scan.times, scan.gaps):
                handle.write(f"{t:.6f},{gap / TWO_PI:.9f}\n")
        summary["min_gap_mhz"] = scan.min_gap / TWO_PI
    _dump(summary)


@main.command()
@click.argument("cnf", type=click.Path(exists=True, path_type=Path))
@click.argument("state_json", type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--embedding", "embedding_path")
@click.option("--shots", type=int)
@click.option("--hide-blockade", is_flag=True, help="Leave blockade-violating rows out of the bar CSV.")
@click.option("--out-dir", type=click.Path(path_type=Path))
def readout(cnf, state_json, config_path, embedding_path, shots, hide_blockade, out_dir):
    """Sample a saved final state with SPAM errors, postselect wires, unfold and decide."""
    config, g = _source_embedding(
        cnf, config_path, embedding=embedding_path, shots=shots, output_dir=str(out_dir) if out_dir else None
    )
    data = json.loads(Path(state_json).read_text(encoding="utf-8"))
    weights = {k: float(v) for k, v in data["probabilities"].items()}
    total = sum(weights.values())
    dist = Distribution(int(data["num_atoms"]), {k: v / total for k, v in weights.items()})
    wires = resolve_embedding(g, config).wires if embedding_path else ()
    if dist.num_atoms != g.num_vertices + sum(w.length for w in wires):
        raise InputError("state does not match the graph and wires", stage="readout")

    confusion: ConfusionModel = config.confusion()
    counts = postselect_wires(sample(dist, config.shots, confusion, seed=config.sample_seed), wires)
    if counts.total == 0:
        _dump({"retention": 0.0, "empty_postselection": True})
        return
    unfolded = mle(counts, confusion)
    out = run_directory(config, cnf)
    _dump(counts.to_dict(), out / "counts.json")
    _dump(unfolded.to_dict(), out / "distribution.json")
    bars_csv(unfolded, g, wires, out / "bars.csv", hide_blockade=hide_blockade)
    _dump(
        {
            "retention": counts.retention,
            RAW: solution_mass(unfolded, g, wires, config.threshold, RAW).to_dict(),
            RENORMALIZED: solution_mass(unfolded, g, wires, config.threshold, RENORMALIZED).to_dict(),
        }
    )


@main.command("solve")
@click.argument("cnf", type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--embedding", "embedding_path")
@click.option("--model", type=click.Choice(["ideal", "graph", "vdw"]))
@click.option("--total-time", type=float)
@click.option("--shots", type=int)
@click.option("--out-dir", type=click.Path(path_type=Path))
@click.option("--record/--no-record", default=False, help="Store the report in the run history.")
def solve_cmd(cnf, config_path, embedding_path, model, total_time, shots, out_dir, record):
    """Run the whole pipeline and write report.json and bars.csv."""
    config = load_config(
        config_path,
        input_path=str(cnf),
        embedding=embedding_path,
        model=model,
        total_time_us=total_time,
        shots=shots,
        output_dir=str(out_dir) if out_dir else None,
    )
    out = run_directory(config, cnf)
    attach_sidecar(out / "rydsat.log")
    try:
        logger.debug("configuration: %s", config.model_dump_json())
        result = solve(load_formula(cnf), config, input_name=cnf.name)
        _dump(result.report, out / "report.json")
        if result.distribution is not None:
            bars_csv(result.distribution, result.graph, result.wires, out / "bars.csv")
        if record:
            run_id = RunStore(config.db_path).add_run(result.report)
            logger.info("recorded run %d", run_id)
    finally:
        detach_sidecar()
    verdict = result.report["verdict"]
    click.echo(
        f"{'SAT' if verdict['satisfiable'] else 'UNSAT'} p={verdict['solution_mass']:.4f} "
        f"({verdict['accounting']}) report={out / 'report.json'}"
    )


@main.command()
@click.option("--n-atoms", type=int)
@click.option("--n-clauses", type=int)
@click.option("--target", type=float, default=0.2, show_default=True)
@click.option("--rep-rate", type=float, default=2.5, show_default=True, help="Repetitions per second.")
def scaling(n_atoms, n_clauses, target, rep_rate):
    """Solution-mass scaling, repetitions and atom budgets."""
    _dump(scaling_table(n_atoms, n_clauses, target, rep_rate))


@main.command()
@click.option("--db", "db_path", default="rydsat_runs.db", show_default=True)
@click.option("--limit", type=int, default=20, show_default=True)
def history(db_path, limit):
    """Recently recorded solve runs."""
    for run in RunStore(db_path).list_runs(limit):
        mass = run["solution_mass"]
        click.echo(
            f"{run['id']:>4} {run['created_at']} {run['cnf_name'] or '-':<20} {run['verdict']:<5} "
            f"{'-' if mass is None else f'{mass:.4f}'} {run['fingerprint'][:12]}"
        )


if __name__ == "__main__":
    sys.exit(main())
