import json

import pytest
from click.testing import CliRunner

from rydsat.cli import main

PSI1 = "c Psi1\np cnf 6 3\n1 2 3 0\n-1 4 0\n1 5 6 0\n"
CONTRADICTION = "p cnf 1 2\n1 0\n-1 0\n"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def psi1_file(tmp_path):
    path = tmp_path / "psi1.cnf"
    path.write_text(PSI1)
    return path


@pytest.fixture
def isolated_db(tmp_path, monkeypatch):
    path = tmp_path / "history.db"
    monkeypatch.setenv("RYDSAT_DB_PATH", str(path))
    return path


def _json(result):
    assert result.exit_code == 0, result.output
    return json.loads(result.output)


def test_init_writes_defaults(runner, tmp_path):
    path = tmp_path / "rydsat.cfg"

    result = runner.invoke(main, ["init", str(path)])

    assert result.exit_code == 0
    assert "SHOTS=10000" in path.read_text()


def test_reduce_summary(runner, psi1_file, tmp_path):
    out = tmp_path / "graph.json"

    result = runner.invoke(main, ["reduce", str(psi1_file), "--out", str(out)])

    assert result.exit_code == 0
    assert result.output.strip() == "8 vertices, 7 intra, 2 inter, alpha=3"
    assert len(json.loads(out.read_text())["edges"]) == 9


def test_reduce_reports_unsat(runner, tmp_path):
    path = tmp_path / "contradiction.cnf"
    path.write_text(CONTRADICTION)

    result = runner.invoke(main, ["reduce", str(path)])

    assert result.exit_code == 0
    assert "alpha=1 < N_C=2 => UNSAT" in result.output


def test_empty_file_exits_with_input_error(runner, tmp_path):
    path = tmp_path / "empty.cnf"
    path.write_text("")

    result = runner.invoke(main, ["reduce", str(path)])

    assert result.exit_code == 2


def test_oracle(runner, psi1_file):
    data = _json(runner.invoke(main, ["oracle", str(psi1_file)]))

    assert data["sat"] == {"satisfiable": True, "count": 34, "witness": "001001"}
    assert data["mis"]["alpha"] == 3
    assert len(data["mis"]["maximum_sets"]) == 13


def test_embed_with_fixture(runner, psi1_file, tmp_path):
    data = _json(runner.invoke(main, ["embed", str(psi1_file), "--fixture", "g1", "--out-dir", str(tmp_path / "out")]))

    assert data["atoms"] == 8
    assert data["violations"] == []
    assert (tmp_path / "out" / "psi1" / "embedding.json").is_file()
    assert (tmp_path / "out" / "psi1" / "positions.csv").is_file()


def test_embed_rotated_fixture(runner, psi1_file, tmp_path):
    data = _json(
        runner.invoke(
            main, ["embed", str(psi1_file), "--fixture", "g1", "--alpha", "1", "--out-dir", str(tmp_path / "out")]
        )
    )

    assert data["dimension"] == 3
    assert data["residual_mean_mhz"] < 0.15


def test_embed_fixture_for_wrong_graph(runner, psi1_file, tmp_path):
    result = runner.invoke(main, ["embed", str(psi1_file), "--fixture", "g2", "--out-dir", str(tmp_path)])

    assert result.exit_code == 2


def test_hamiltonian_levels(runner, psi1_file):
    result = runner.invoke(main, ["hamiltonian", str(psi1_file), "--levels", "3"])

    assert result.exit_code == 0
    rows = [line for line in result.output.splitlines() if line and line[0].isdigit()]
    assert [float(r.split(",")[1]) for r in rows] == pytest.approx([-6.0, -6.0, -6.0])


def test_vdw_without_positions_is_an_input_error(runner, psi1_file):
    result = runner.invoke(main, ["hamiltonian", str(psi1_file), "--model", "vdw"])

    assert result.exit_code == 2


def test_evolve_then_readout(runner, psi1_file, tmp_path):
    out = tmp_path / "out"
    summary = _json(
        runner.invoke(
            main, ["evolve", str(psi1_file), "--embedding", "g1", "--total-time", "0.5", "--out-dir", str(out)]
        )
    )

    state = out / "psi1" / "state.json"
    assert summary["norm"] == pytest.approx(1.0, abs=1e-6)
    assert "min_gap_mhz" in summary
    assert (out / "psi1" / "gaps.csv").is_file()

    readout = _json(
        runner.invoke(
            main,
            ["readout", str(psi1_file), str(state), "--embedding", "g1", "--shots", "2000", "--out-dir", str(out)],
        )
    )

    assert readout["retention"] == 1.0
    assert readout["raw"]["accounting"] == "raw"
    assert 0.0 <= readout["renormalized"]["solution_mass"] <= 1.0
    for name in ("counts.json", "distribution.json", "bars.csv"):
        assert (out / "psi1" / name).is_file()


@pytest.mark.parametrize("extra", [[], ["--residual-drive"]])
def test_alpha_sweep_command(runner, psi1_file, tmp_path, extra):
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "evolve",
            str(psi1_file),
            "--embedding",
            "g1",
            "--total-time",
            "0.2",
            "--alpha-sweep",
            "0,1",
            "--out-dir",
            str(out),
            *extra,
        ],
    )

    points = _json(result)
    assert [p["alpha"] for p in points] == [0.0, 1.0]
    assert (out / "psi1" / "alpha_sweep.csv").is_file()


def test_solve_writes_report_and_records(runner, psi1_file, tmp_path, isolated_db):
    out = tmp_path / "out"
    args = ["solve", str(psi1_file), "--embedding", "g1", "--total-time", "1", "--shots", "2000"]

    result = runner.invoke(main, args + ["--out-dir", str(out), "--record"])

    assert result.exit_code == 0, result.output
    assert result.output.startswith(("SAT p=", "UNSAT p="))
    report = json.loads((out / "psi1" / "report.json").read_text())
    assert report["graph"]["alpha"] == 3
    assert report["embedding"]["atoms"] == 8
    assert set(report["fidelity"]) == {"manifold", "single", "manifold_size"}
    assert report["fidelity"]["manifold_size"] == 13
    assert report["verdict_raw"]["accounting"] == "raw"
    assert report["verdict_renormalized"]["accounting"] == "renormalized"
    assert (out / "psi1" / "bars.csv").is_file()
    assert (out / "psi1" / "rydsat.log").is_file()

    history = runner.invoke(main, ["history", "--db", str(isolated_db)])
    assert history.exit_code == 0
    assert "psi1.cnf" in history.output


def test_solve_reports_are_reproducible(runner, psi1_file, tmp_path, isolated_db):
    args = ["solve", str(psi1_file), "--embedding", "g1", "--total-time", "0.5", "--shots", "1000"]

    runner.invoke(main, args + ["--out-dir", str(tmp_path / "a")])
    runner.invoke(main, args + ["--out-dir", str(tmp_path / "b")])

    first = (tmp_path / "a" / "psi1" / "report.json").read_bytes()
    second = (tmp_path / "b" / "psi1" / "report.json").read_bytes()
    assert first == second


def test_bad_config_file(runner, psi1_file, tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("NOT_A_KEY=1\n")

    result = runner.invoke(main, ["solve", str(psi1_file), "--config", str(config)])

    assert result.exit_code == 2


def test_scaling(runner):
    data = _json(runner.invoke(main, ["scaling", "--n-atoms", "400"]))

    assert 1.0e-7 <= data["atoms"]["p"] <= 2.0e-7
    assert data["clause_range"] == [4, 133]


def test_scaling_tiny_atom_budget(runner):
    result = runner.invoke(main, ["scaling", "--n-atoms", "1"])

    assert result.exit_code == 0
    assert _json(result)["clause_range"] == [0, 0]


def test_scaling_bounds(runner):
    data = _json(runner.invoke(main, ["scaling", "--n-clauses", "3"]))

    assert (data["bounds"]["lower"], data["bounds"]["upper"]) == (9, 324)
