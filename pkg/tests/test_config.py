import json
import math

import pytest

from rydsat.atoms.hamiltonian import GraphU, Ideal, VdW
from rydsat.config import RunConfig, load_config, write_default_config
from rydsat.errors import ConfigError


def test_defaults():
    config = load_config()

    assert config.model == "ideal"
    assert isinstance(config.interaction_model(), Ideal)
    assert config.schedule().total_time == pytest.approx(4.0)
    assert config.schedule().segments[-1].delta[1] == pytest.approx(2 * math.pi * 2.0)
    assert config.shots == 10000
    assert config.confusion().p_0_given_1 == 0.079
    assert config.sim_options().dt == 1e-3
    assert not config.sim_options().noisy
    assert config.rabi_factor_list() is None


def test_frequencies_convert_to_angular_units():
    config = load_config(gamma_decay_mhz=0.03, model="graph", u_mhz=2.0)

    assert config.sim_options().gamma_decay == pytest.approx(2 * math.pi * 0.03)
    assert config.interaction_model() == GraphU(2 * math.pi * 2.0)


def test_vdw_model_uses_c6():
    model = load_config(model="vdw", c6_mhz_um6=5.0e5).interaction_model()

    assert model == VdW(2 * math.pi * 5.0e5)


def test_config_file_round_trip(tmp_path):
    path = write_default_config(tmp_path / "rydsat.cfg")

    text = path.read_text()
    assert text.startswith("# rydsat run configuration")
    assert "SHOTS=10000" in text
    assert load_config(path).fingerprint() == load_config().fingerprint()


def test_config_file_values(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# trial\nSHOTS=500\ntotal_time_us=16\nRABI_FACTORS=1,0.5\n")

    config = load_config(path)

    assert config.shots == 500
    assert config.total_time_us == 16.0
    assert config.rabi_factor_list() == [1.0, 0.5]


def test_explicit_overrides_beat_the_file(tmp_path, monkeypatch):
    path = tmp_path / "run.cfg"
    path.write_text("SHOTS=500\n")
    monkeypatch.setenv("RYDSAT_SHOTS", "123")
    monkeypatch.setenv("RYDSAT_SAMPLE_SEED", "9")

    config = load_config(path, shots=77)

    assert config.shots == 77
    assert config.sample_seed == 9
    assert load_config(path).shots == 500


def test_unknown_key(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("SHOTZ=5\n")

    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert "SHOTZ" in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


@pytest.mark.parametrize(
    "overrides",
    [
        {"d_um": 12.0},
        {"shots": 0},
        {"model": "ising"},
        {"accounting": "weighted"},
        {"dimension": 4},
        {"ramp_up_fraction": 0.5},
        {"integrator": "euler"},
        {"open_mode": "sometimes"},
        {"rabi_factors": "1,-1"},
        {"p_1_given_0": 1.0},
    ],
)
def test_invalid_values(overrides):
    with pytest.raises(ConfigError) as exc:
        load_config(**overrides)
    assert exc.value.exit_code == 2


def test_fingerprint_ignores_output_locations():
    a = load_config(output_dir="a", db_path="a.db", workers=4)
    b = load_config(output_dir="b", db_path="b.db")

    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != load_config(sim_seed=1).fingerprint()


def test_stage_selection():
    assert load_config().use_embedding
    assert not load_config(stages="reduce,evolve,readout").use_embedding
    assert load_config(stages="reduce,evolve", model="vdw").use_embedding


def test_confusion_file(tmp_path):
    path = tmp_path / "confusion.json"
    path.write_text(json.dumps({"p_1_given_0": 0.01, "p_0_given_1": 0.02}))

    confusion = load_config(confusion_path=str(path)).confusion()

    assert (confusion.p_1_given_0, confusion.p_0_given_1) == (0.01, 0.02)


def test_geometry_from_config():
    geometry = load_config(d_um=6.0, d_blockade_um=9.0).geometry()

    assert (geometry.d, geometry.d_blockade) == (6.0, 9.0)
    assert isinstance(RunConfig().geometry().d, float)
