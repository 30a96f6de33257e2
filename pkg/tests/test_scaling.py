import pytest

from rydsat.errors import InputError
from rydsat.readout.scaling import (
    atom_bounds,
    clause_range,
    repetitions_for,
    scaling_estimate,
    scaling_table,
    success_prob,
    wall_time,
)


def test_success_prob():
    assert success_prob(1e-7, 2_230_000) == pytest.approx(0.20, abs=0.005)
    assert success_prob(0.5, 1) == pytest.approx(0.5)
    assert success_prob(0.0, 100) == 0.0
    assert success_prob(0.3, 0) == 0.0
    assert success_prob(1.0, 3) == 1.0


def test_success_prob_is_stable_for_tiny_p():
    assert success_prob(1e-18, 10) == pytest.approx(1e-17, rel=1e-9)


@pytest.mark.parametrize(
    "p, target, expected",
    [
        (0.5, 0.999999, 20),
        (1e-7, 0.2, 2_231_436),
        (1.0, 0.5, 1),
        (0.9, 0.5, 1),
    ],
)
def test_repetitions_for(p, target, expected):
    m = repetitions_for(p, target)

    assert m == expected
    assert success_prob(p, m) >= target
    if m > 1:
        assert success_prob(p, m - 1) < target


@pytest.mark.parametrize("p, target", [(0.0, 0.5), (0.5, 1.0), (0.5, 0.0), (1.5, 0.5)])
def test_repetitions_for_rejects(p, target):
    with pytest.raises(InputError):
        repetitions_for(p, target)


def test_scaling_estimate():
    assert 1.0e-7 <= scaling_estimate(400) <= 2.0e-7
    assert scaling_estimate(0) == 1.0
    assert scaling_estimate(10) == pytest.approx(1.04**-10)


def test_atom_bounds():
    bounds = atom_bounds(3)

    assert (bounds.lower, bounds.upper) == (9, 324)
    assert atom_bounds(10).to_dict()["upper"] == 3600
    with pytest.raises(InputError):
        atom_bounds(0)


def test_clause_range():
    assert clause_range(400) == (4, 133)
    assert clause_range(36) == (1, 12)
    assert clause_range(2) == (0, 0)
    with pytest.raises(InputError):
        clause_range(-1)


def test_wall_time():
    assert wall_time(2_231_436) / 86400 == pytest.approx(10.33, abs=0.01)
    assert wall_time(30, rep_rate_hz=3.0) == 10.0
    with pytest.raises(InputError):
        wall_time(1, rep_rate_hz=0.0)


def test_scaling_table_for_atoms():
    table = scaling_table(n_atoms=400, target=0.2)

    row = table["atoms"]
    assert row["p"] == pytest.approx(1.54e-7, rel=0.01)
    assert row["repetitions"] == 1_451_845
    assert row["wall_time_days"] == pytest.approx(row["wall_time_s"] / 86400)
    assert table["clause_range"] == [4, 133]


def test_scaling_table_for_clauses():
    table = scaling_table(n_clauses=3)

    assert table["bounds"]["lower"] == 9
    assert table["bounds"]["upper"] == 324
    assert table["at_lower_bound"]["n_atoms"] == 9
    assert table["at_upper_bound"]["repetitions"] > table["at_lower_bound"]["repetitions"]


def test_scaling_table_underflow():
    row = scaling_table(n_atoms=100_000)["atoms"]

    assert row["p"] == 0.0
    assert row["repetitions"] is None


def test_scaling_table_needs_a_size():
    with pytest.raises(InputError):
        scaling_table()


@pytest.mark.parametrize("n_atoms", [0, 1, 2])
def test_scaling_table_below_one_gadget(n_atoms):
    table = scaling_table(n_atoms=n_atoms)

    assert table["clause_range"] == [0, 0]
    assert table["atoms"]["repetitions"] >= 1
