import json
import os

import pytest

from src.Config import FIXED_N, ExperimentConfig, load_config, parse_config
from src.Errors import ConfigError

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def write(tmp_path, text, name="config.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_defaults():
    config = parse_config({"experiment": "spectrum", "clusters": [{"s": 4}]})
    assert config.N_range == (100, 5000)
    assert config.Nh_range == (1e-3, 1e-1)
    assert config.noise_eps_range == (1e-6, 1e-3)
    assert config.rng == "PCG64"
    assert config.samples == 200
    assert config.multiplicities == (4,)
    assert config.label == "spectrum-4"


@pytest.mark.parametrize("name", ["angles-decay.yaml", "angles-decay-6-6.yaml", "angles-plateau.yaml",
                                  "spectrum-single.yaml", "spectrum-multi.yaml", "leastsq.yaml"])
def test_shipped_configurations_load(name):
    config = load_config(os.path.join(ROOT, "yaml_file", name))
    assert isinstance(config, ExperimentConfig)


def test_root_configuration_loads():
    config = load_config(os.path.join(ROOT, "config.yaml"))
    assert config.experiment == "spectrum"
    assert config.multiplicities == (4,)


def test_plateau_configuration():
    config = load_config(os.path.join(ROOT, "yaml_file", "angles-plateau.yaml"))
    assert config.mode == FIXED_N
    assert config.theta_values == (0.01, 0.1, 1.0)
    assert config.N == 10_000


def test_json_documents_are_accepted(tmp_path):
    document = {"experiment": "leastsq", "clusters": [{"s": 2}, {"s": 3}, {"s": 1}],
                "N_range": [100, 1000], "samples": 10, "noise_eps_range": [1e-6, 1e-4]}
    config = load_config(write(tmp_path, json.dumps(document), "config.json"))
    assert config.multiplicities == (2, 3, 1)
    assert config.noise_eps_range == (1e-6, 1e-4)


def test_json_exponent_floats(tmp_path):
    document = {"experiment": "angles", "clusters": [{"s": 4}, {"s": 2}], "Nh": 1e-10, "theta": 1.0,
                "N_range": [100, 100000], "samples": 16}
    text = json.dumps(document)
    assert '"Nh": 1e-10' in text
    config = load_config(write(tmp_path, text, "angles.json"))
    assert config.Nh == 1e-10
    assert config.N_range == (100, 100_000)


@pytest.mark.parametrize("literal, value", [("1e-10", 1e-10), ("2E5", 2e5), ("-3.5e+2", -350.0), ("1.0e-6", 1e-6)])
def test_yaml_exponent_floats(tmp_path, literal, value):
    path = write(tmp_path, f"experiment: spectrum\nclusters:\n  - s: 2\n    center: {literal}\n  - s: 1\n"
                           f"    center: 3.0\n")
    assert load_config(path).clusters[0].center == value


def test_strings_stay_strings(tmp_path):
    path = write(tmp_path, "experiment: spectrum\nname: 1e-3x\nclusters:\n  - s: 2\n")
    assert load_config(path).name == "1e-3x"


def test_unknown_key_reports_line(tmp_path):
    path = write(tmp_path, "experiment: spectrum\nclusters:\n  - s: 2\nbandwidth: 10\n")
    with pytest.raises(ConfigError) as error:
        load_config(path)
    assert error.value.field == "bandwidth"
    assert error.value.line == 4


def test_nested_error_reports_line(tmp_path):
    path = write(tmp_path, "experiment: spectrum\nclusters:\n  - s: 2\n  - s: 0\n")
    with pytest.raises(ConfigError) as error:
        load_config(path)
    assert error.value.field == "clusters[1].s"
    assert error.value.line == 4


def test_malformed_yaml(tmp_path):
    path = write(tmp_path, "experiment: spectrum\nclusters: [\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_empty_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, ""))


@pytest.mark.parametrize("document, field", [
    ({"clusters": [{"s": 2}]}, "experiment"),
    ({"experiment": "fourier", "clusters": [{"s": 2}]}, "experiment"),
    ({"experiment": "spectrum", "clusters": []}, "clusters"),
    ({"experiment": "spectrum", "clusters": [{"s": 2, "h": 0.1, "h_range": [0.1, 0.2]}]}, "clusters[0]"),
    ({"experiment": "spectrum", "clusters": [{"s": 2, "tau": 1.5}]}, "clusters[0].tau"),
    ({"experiment": "spectrum", "clusters": [{"s": 2, "layout": "grid"}]}, "clusters[0].layout"),
    ({"experiment": "spectrum", "clusters": [{"s": 2}], "N_range": [500, 100]}, "N_range"),
    ({"experiment": "spectrum", "clusters": [{"s": 8}], "N_range": [5, 100]}, "N_range"),
    ({"experiment": "spectrum", "clusters": [{"s": 2}], "seed": -1}, "seed"),
    ({"experiment": "spectrum", "clusters": [{"s": 2}], "rng": "MT19937"}, "rng"),
    ({"experiment": "leastsq", "clusters": [{"s": 2}], "noise_eps_range": [0, 0]}, "noise_eps_range"),
    ({"experiment": "angles", "clusters": [{"s": 2}]}, "clusters"),
    ({"experiment": "spectrum", "clusters": [{"s": 2, "h": 0.01}, {"s": 2, "h": 0.02}]}, "clusters"),
    ({"experiment": "spectrum", "clusters": [{"s": 2, "center": 0.0}, {"s": 2}]}, "clusters"),
])
def test_validation_errors(document, field):
    with pytest.raises(ConfigError) as error:
        parse_config(document)
    assert error.value.field == field


def test_with_seed_and_round_trip():
    config = parse_config({"experiment": "spectrum", "clusters": [{"s": 2, "h": 0.001}, {"s": 1}]})
    reseeded = config.with_seed(42)
    assert reseeded.seed == 42
    assert reseeded.clusters == config.clusters
    payload = reseeded.to_dict()
    assert payload["clusters"] == [{"s": 2, "h": 0.001, "layout": "equispaced"}, {"s": 1, "layout": "equispaced"}]
    assert parse_config(payload) == reseeded
    with pytest.raises(ConfigError):
        config.with_seed(2 ** 64)
