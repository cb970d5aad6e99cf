import math
import os

import numpy as np
import pytest
import yaml

import src.Log
from src.Config import load_config, parse_config
from src.Errors import InfeasibleLayoutError
from src.Experiment import Experiment, build_cluster_config, cluster_centers
from src.Writer import parse_csv

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture
def logger(tmp_path):
    return src.Log.Logger(str(tmp_path / "app.log"))


def spectrum_config(**overrides):
    document = {"experiment": "spectrum", "clusters": [{"s": 3}], "N_range": [100, 400], "samples": 6, "seed": 4}
    document.update(overrides)
    return parse_config(document)


def test_cluster_layout_defaults():
    config = parse_config({"experiment": "leastsq", "clusters": [{"s": 2}, {"s": 3}, {"s": 1}]})
    centers = cluster_centers(config)
    assert centers[0] == pytest.approx(0.5)
    layout = build_cluster_config(config, 1e-4)
    assert [c.h for c in layout.clusters] == [1e-4, 1e-4, 0.0]
    assert layout.theta == pytest.approx(2 * math.pi / 3 - 1e-4)


def test_cluster_layout_rejects_overlap():
    config = parse_config({"experiment": "spectrum", "clusters": [{"s": 2, "center": 0.0}, {"s": 2, "center": 0.1}]})
    with pytest.raises(InfeasibleLayoutError):
        build_cluster_config(config, 0.2)


def test_spectrum_run_is_reproducible(tmp_path, logger):
    config = spectrum_config()
    serial = Experiment(config, logger=logger)
    parallel = Experiment(config, jobs=2, logger=logger)
    first = serial.run()
    second = parallel.run()
    serial.save(first, str(tmp_path / "serial"))
    parallel.save(second, str(tmp_path / "parallel"))
    name = f"{config.label}.csv"
    assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()
    assert [r.sample for r in first] == list(range(6))
    for record in first:
        assert 100 <= record.N <= 400
        assert 1e-3 <= record.Nh <= 1e-1
        assert len(record.sigma) == 3
        assert list(record.sigma) == sorted(record.sigma, reverse=True)
        assert record.theta is None
        assert record.eps_ok


def test_spectrum_seed_changes_samples(logger):
    first = Experiment(spectrum_config(), logger=logger).run()
    other = Experiment(spectrum_config().with_seed(5), logger=logger).run()
    assert [r.N for r in first] != [r.N for r in other]


def test_save_writes_csv_svg_and_meta(tmp_path, logger):
    experiment = Experiment(spectrum_config(name="small"), logger=logger)
    records = experiment.run()
    out = str(tmp_path / "results")
    paths = experiment.save(records, out, fmt="both")
    assert [os.path.basename(p) for p in paths] == ["small.csv", "small.svg", "small-meta.yaml"]
    assert parse_csv(paths[0]) == records
    with open(paths[2]) as file:
        meta = yaml.safe_load(file)
    assert meta["experiment"] == "spectrum"
    assert meta["seed"] == 4
    assert meta["samples"] == 6
    assert meta["config"]["name"] == "small"
    assert set(meta["summary"]) >= {"sigma_1", "sigma_2", "sigma_3", "census"}


def test_single_cluster_spectrum_slopes(logger):
    config = parse_config({"experiment": "spectrum", "clusters": [{"s": 3}], "samples": 20, "seed": 1})
    experiment = Experiment(config, logger=logger)
    summary = experiment.summarize(experiment.run())
    slopes = [summary[f"sigma_{j}"]["slope"] for j in (1, 2, 3)]
    np.testing.assert_allclose(slopes, [0, 1, 2], atol=0.2)
    assert summary["census"]["matches"]


def test_multi_cluster_spectrum_records(logger):
    config = parse_config({"experiment": "spectrum", "clusters": [{"s": 2}, {"s": 1}, {"s": 2}],
                           "N_range": [100, 300], "samples": 4})
    for record in Experiment(config, logger=logger).run():
        assert record.alpha is not None and record.alpha >= 0
        assert record.theta == pytest.approx(2 * math.pi / 3 - record.h)
        assert record.s_profile == "2-1-2"
        assert record.alpha_ok == (5 * record.alpha <= 1)


def test_leastsq_run(logger):
    config = parse_config({"experiment": "leastsq", "clusters": [{"s": 2}, {"s": 3}, {"s": 1}],
                           "N_range": [100, 500], "samples": 5, "seed": 2})
    records = Experiment(config, logger=logger).run()
    assert len(records) == 5
    for record in records:
        assert 1e-6 <= record.noise_eps <= 1e-3
        assert record.kappa is not None and record.kappa >= 1
        assert len(record.delta_a) == 6
        assert record.bound_ok
        assert record.sigma == ()


def test_angles_fixed_Nh(logger):
    config = parse_config({"experiment": "angles", "clusters": [{"s": 2}, {"s": 1}], "Nh": 1e-10,
                           "N_range": [100, 10000], "samples": 5, "theta": 1.0})
    experiment = Experiment(config, logger=logger)
    assert [N for _, N in experiment.angle_grid()] == [100, 316, 1000, 3162, 10000]
    records = experiment.run()
    betas = [r.beta for r in records]
    assert all(0 < b < math.pi / 2 for b in betas)
    assert betas[-1] < betas[0]
    assert all(r.beta * r.N * r.theta < 20 for r in records)
    assert all(r.Nh == pytest.approx(1e-10) for r in records)


def test_angles_fixed_N(logger):
    config = parse_config({"experiment": "angles", "mode": "fixed-N", "N": 1000, "clusters": [{"s": 2}, {"s": 2}],
                           "Nh_range": [1e-6, 1e-2], "theta_values": [0.1, 1.0], "samples": 3})
    experiment = Experiment(config, logger=logger)
    records = experiment.run()
    assert len(records) == 6
    assert {r.theta for r in records} == {0.1, 1.0}
    assert all(r.N == 1000 for r in records)
    summary = experiment.summarize(records)
    assert set(summary) == {"theta=0.1", "theta=1"}
    for label, theta in (("theta=0.1", 0.1), ("theta=1", 1.0)):
        entry = summary[label]
        assert entry["plateau"] > 0
        assert entry["plateau_times_theta"] == pytest.approx(entry["plateau"] * theta)
    series, axes = experiment.series(records)
    assert axes == ("Nh", "beta")
    assert [s.label for s in series] == ["theta=0.1", "theta=1"]


def shipped(name, **overrides):
    payload = load_config(os.path.join(ROOT, "yaml_file", name)).to_dict()
    payload.update(overrides)
    return parse_config(payload)


def test_plateau_scales_with_inverse_separation(logger):
    config = shipped("angles-plateau.yaml")
    assert config.theta_values == (0.01, 0.1, 1.0)
    experiment = Experiment(config, logger=logger)
    summary = experiment.summarize(experiment.run())
    levels = [summary[f"theta={theta:g}"]["plateau_times_theta"] for theta in config.theta_values]
    assert all(level > 0 for level in levels)
    assert max(levels) / min(levels) <= 2


def test_multi_cluster_union_bounds_and_census(logger):
    config = shipped("spectrum-multi.yaml", samples=60)
    assert config.multiplicities == (2, 1, 3, 1)
    experiment = Experiment(config, logger=logger)
    records = experiment.run()
    in_regime = [r for r in records if r.in_regime]
    assert len(in_regime) >= 30
    assert all(r.bound_ok for r in in_regime)
    census = experiment.summarize(records)["census"]
    assert census["expected"] == [4, 2, 1]
    assert census["matches"]
