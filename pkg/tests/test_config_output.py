import json

import numpy as np
import pytest

from rydprep.basis import DomainError
from rydprep.config import SCHEMA, ConfigError, build_config, default_config, load_config, parse_config
from rydprep.output import MAX_DUMP_SITES, dump_states, load_states, read_csv, write_csv, write_manifest


def test_defaults_reproduce_reference_run():
    cfg = default_config()
    assert cfg.n_sites == 7 and cfg.lattice.n_sites == 7
    assert cfg.schedule.total_duration == 2.0 and cfg.schedule.rabi_max == 2.0
    assert cfg.lattice.c6 == pytest.approx(53.0 * 5.0**6)
    assert set(cfg.to_dict()) == set(SCHEMA)


def test_toml_round_trip():
    cfg = parse_config('n_sites = 5\nramp_fraction = 0.15\nlz_durations_us = [1, 2]\nramp_shape = "linear"\n')
    again = parse_config(cfg.to_toml())
    assert again.to_dict() == cfg.to_dict()
    assert again.lz_durations_us == [1.0, 2.0]


def test_error_reports_key_and_line():
    with pytest.raises(ConfigError) as err:
        parse_config("n_sites = 7\n\nramp_fraction = 0.6\n")
    assert err.value.key == "ramp_fraction" and err.value.line == 3
    assert "line 3" in str(err.value)


@pytest.mark.parametrize("text, key", [
    ("n_site = 7", "n_site"),
    ("n_sites = 7.5", "n_sites"),
    ("n_sites = true", "n_sites"),
    ("gap_samples = 10", "gap_samples"),
    ("slope_window = 0.5", "slope_window"),
    ("sweep_sites = [4]", "sweep_sites"),
    ("duration_us = -1.0", "duration_us"),
    ("detuning_min_mhz = 20.0", "detuning_min_mhz"),
    ("n_sites = 17\ndump_states = true", "dump_states"),
    ("[table]\nx = 1", "table"),
])
def test_invalid_values(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key


def test_bad_toml():
    with pytest.raises(ConfigError):
        parse_config("n_sites = ")


def test_load_from_manifest(tmp_path):
    cfg = build_config({"n_sites": 3, "duration_us": 1.0})
    man = write_manifest(tmp_path / "manifest.json", command="evolve", config=cfg.to_dict(), outputs=[],
                         wall_time_s=0.1)
    assert load_config(man).to_dict() == cfg.to_dict()
    payload = json.loads(man.read_text())
    assert {"command", "config", "versions", "wall_time_s", "outputs"} <= set(payload)
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_csv_round_trip(tmp_path):
    data = np.array([[0.0, -0.0, 1.0 / 3.0], [1e-20, 2.5e7, -4.0]])
    path = write_csv(tmp_path / "x.csv", ["a", "b", "c"], data)
    text = path.read_text()
    assert text.splitlines()[0] == "a,b,c" and "-0," not in text
    header, back = read_csv(path)
    assert header == ["a", "b", "c"]
    assert np.allclose(back, data, rtol=1e-11, atol=0)


def test_state_dump_round_trip(tmp_path, rng):
    states = rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8))
    path = dump_states(tmp_path / "s.bin", 3, states)
    raw = path.read_bytes()
    assert len(raw) == 8 + 4 * 8 * 16
    assert np.frombuffer(raw[:8], "<u4").tolist() == [3, 4]
    n, back = load_states(path)
    assert n == 3 and np.array_equal(back, states)


def test_state_dump_validation(tmp_path):
    with pytest.raises(DomainError):
        dump_states(tmp_path / "s.bin", MAX_DUMP_SITES + 1, np.zeros((1, 2)))
    with pytest.raises(DomainError):
        dump_states(tmp_path / "s.bin", 2, np.zeros((1, 2)))
    (tmp_path / "t.bin").write_bytes(np.array([2, 3], "<u4").tobytes() + b"\0" * 16)
    with pytest.raises(DomainError):
        load_states(tmp_path / "t.bin")
