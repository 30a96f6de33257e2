"""End-to-end checks on the reference instances.

Tests marked slow run full sweeps; select them with ``pytest -m slow``.
"""

import numpy as np
import pytest

from rydsat.atoms.evolution import (
    Schedule,
    Segment,
    SimOptions,
    alpha_sweep,
    default_schedule,
    evolve,
    evolve_open,
    fidelity,
    residual_schedule,
)
from rydsat.atoms.hamiltonian import DriveParams, GraphU, Ideal, build, build_parts, ground_state, reference_manifold
from rydsat.config import load_config
from rydsat.pipeline import solve
from rydsat.readout.measurement import ConfusionModel, Distribution, mle, sample
from rydsat.readout.scaling import atom_bounds, scaling_estimate, success_prob
from rydsat.readout.verdict import SOLUTION, bar_rows, solution_mass
from rydsat.sat.formula import Formula, brute_force_sat, evaluate
from rydsat.sat.oracle import enumerate_mis
from rydsat.sat.reduction import INTER, decode, reduce

TWO_PI = 2 * np.pi


def _random_formula(rng, max_variables=8, max_clauses=6, max_width=3):
    n = int(rng.integers(1, max_variables + 1))
    clauses = []
    for _ in range(int(rng.integers(1, max_clauses + 1))):
        width = int(rng.integers(1, min(max_width, n) + 1))
        variables = rng.choice(np.arange(1, n + 1), size=width, replace=False)
        clauses.append([int(v) if rng.random() < 0.5 else -int(v) for v in variables])
    return Formula.from_lists(n, clauses)


def _as_set(config, num_atoms):
    return tuple(i for i in range(num_atoms) if config >> i & 1)


def test_reduction_is_exact_on_random_instances(psi1, psi2, psi3):
    rng = np.random.default_rng(2024)
    formulas = [_random_formula(rng) for _ in range(500)] + [psi1, psi2, psi3]

    for formula in formulas:
        g = reduce(formula)
        mis = enumerate_mis(g)
        sat = brute_force_sat(formula)
        assert sat.satisfiable == (mis.alpha == formula.num_clauses), formula.to_lists()
        if sat.satisfiable:
            for selection in mis.maximum_sets:
                assert evaluate(formula, decode(g, selection))


@pytest.mark.parametrize("fixture, inter", [("g1", 2), ("g2", 3), ("g3", 4)])
def test_fixture_graphs(request, fixture, inter):
    g = request.getfixturevalue(fixture)

    assert (g.num_vertices, g.count(INTER)) == (8, inter)


def test_mis_phase_ground_states(g1, g2, g3):
    rng = np.random.default_rng(7)
    graphs = [g1, g2, g3]
    while len(graphs) < 53:
        g = reduce(_random_formula(rng, max_variables=6, max_clauses=4))
        if g.num_vertices <= 12:
            graphs.append(g)

    u = TWO_PI * 1.0e6 / 7.0**6
    for g in graphs:
        h = build(g, GraphU(u), DriveParams(0.0, 0.5 * u))
        configs = sorted(_as_set(c, g.num_vertices) for s in ground_state(h) for c in s.configurations())
        assert configs == enumerate_mis(g).maximum_sets


def test_scaling_formulas():
    assert success_prob(1e-7, 2_230_000) == pytest.approx(0.20, abs=0.005)
    assert 1.0e-7 <= scaling_estimate(400) <= 2.0e-7
    for n_clauses in range(1, 8):
        bounds = atom_bounds(n_clauses)
        assert (bounds.lower, bounds.upper) == (3 * n_clauses, 36 * n_clauses**2)


@pytest.mark.slow
@pytest.mark.parametrize("total_time, floor", [(16.0, 0.90), (4.0, 0.70)])
def test_adiabatic_solution_mass(g1, total_time, floor):
    parts = build_parts(g1, Ideal())

    state = evolve(parts.at, default_schedule(total_time=total_time), SimOptions())
    dist = Distribution.from_state(state)

    assert solution_mass(dist, g1).solution_mass >= floor
    if total_time == 16.0:
        top = bar_rows(dist, g1, top=5)
        assert all(row["class"] == SOLUTION for row in top)
    labels = {row["label"]: row["class"] for row in bar_rows(dist, g1)}
    assert labels.get("001;01;001") == SOLUTION
    assert labels.get("001;00;001", "independent") != SOLUTION


@pytest.mark.slow
def test_alpha_rotation_improves_fidelity(g1_embedding):
    points = alpha_sweep(g1_embedding, [0.0, 0.5, 1.0], residual_schedule(), SimOptions())

    manifold = [p.fidelity_manifold for p in points]
    assert manifold[2] - manifold[0] >= 0.05
    assert manifold[0] < manifold[1] < manifold[2]
    assert points[2].residual_mean_mhz <= 0.75 * points[0].residual_mean_mhz


@pytest.mark.slow
def test_planar_g1_already_reaches_the_mis_phase(g1_embedding):
    # at the default drive the residual couplings are small next to the final detuning
    points = alpha_sweep(g1_embedding, [0.0, 1.0], default_schedule(), SimOptions())

    assert points[0].fidelity_manifold == pytest.approx(0.988, abs=2e-3)
    assert points[1].fidelity_manifold >= points[0].fidelity_manifold


@pytest.mark.slow
def test_wire_logic_on_g3(psi3, tmp_path):
    config = load_config(embedding="g3", model="graph", output_dir=str(tmp_path))

    result = solve(psi3, config, input_name="psi3.cnf")

    report = result.report
    assert report["readout"]["retention"] > 0
    assert report["wire_violation"] <= 0.02


@pytest.mark.slow
def test_spam_unfolding_recovers_ten_atoms():
    truth = Distribution(
        10, {"1010000000": 0.4, "0101010000": 0.3, "0000000011": 0.2, "1111100000": 0.1}
    )
    counts = sample(truth, 100_000, ConfusionModel(), seed=17)

    dist = mle(counts, ConfusionModel())

    assert dist.total_variation(truth) <= 0.05
    history = dist.log_likelihood
    assert all(b >= a - 1e-9 for a, b in zip(history, history[1:]))


@pytest.mark.slow
def test_norm_and_step_size_hygiene(g1):
    parts = build_parts(g1, Ideal())
    schedule = default_schedule()

    coarse = evolve(parts.at, schedule, SimOptions(dt=1e-3))
    fine = evolve(parts.at, schedule, SimOptions(dt=5e-4))

    assert abs(coarse.norm() - 1.0) <= 1e-6
    overlap = abs(np.vdot(coarse.vector, fine.vector)) ** 2
    assert 1.0 - overlap <= 1e-6
    manifold = reference_manifold(g1)
    assert abs(fidelity(coarse, manifold) - fidelity(fine, manifold)) <= 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("clauses", [[[1]], [[1], [-1]], [[1, 2, 3]]])
def test_trajectories_match_master_equation(clauses):
    g = reduce(Formula.from_lists(3, clauses))
    parts = build_parts(g, GraphU(TWO_PI * 5.0))
    omega = TWO_PI
    schedule = Schedule((Segment(1.5, (omega, omega), (0.0, 0.0)),))
    noise = dict(dt=0.005, gamma_decay=TWO_PI * 0.1, gamma_dephase=TWO_PI * 0.05, trajectories=400, seed=11)

    dense = evolve_open(parts, schedule, SimOptions(open_mode="dense", **noise))
    ensemble = evolve_open(parts, schedule, SimOptions(open_mode="trajectories", **noise))

    per_trajectory = np.array([np.abs(v) ** 2 / np.vdot(v, v).real for v in ensemble.trajectories])
    sigma = per_trajectory.std(axis=0) / np.sqrt(len(per_trajectory))
    assert np.all(np.abs(per_trajectory.mean(axis=0) - dense.probabilities()) <= 3 * sigma + 1e-3)


@pytest.mark.slow
def test_noise_lowers_solution_mass(psi1, tmp_path):
    base = dict(embedding="g1", total_time_us=4.0, output_dir=str(tmp_path))
    clean = solve(psi1, load_config(**base, p_1_given_0=0.0, p_0_given_1=0.0))
    noisy = solve(psi1, load_config(**base, gamma_decay_mhz=0.03, gamma_dephase_mhz=0.03, trajectories=50))

    assert noisy.report["state_verdict"]["solution_mass"] < clean.report["state_verdict"]["solution_mass"]


def test_contradiction_has_no_solution_mass(contradiction):
    g = reduce(contradiction)
    parts = build_parts(g, Ideal())

    state = evolve(parts.at, default_schedule(total_time=1.0), SimOptions(dt=1e-2))

    assert solution_mass(Distribution.from_state(state), g).solution_mass == 0.0
