import os

import pytest
import yaml

from src.Errors import InvalidArgumentError, RankDeficientError
from src.Validation import FAULHABER_CASES, SUITE_NAMES, SUITES, Suite, run_suite, run_verify


@pytest.mark.parametrize("suite", SUITES, ids=SUITE_NAMES)
def test_suite_holds_on_a_sample(suite, tmp_path):
    result = run_suite(suite, seed=0, count=8, out_dir=str(tmp_path))
    assert result.instances == 8
    assert result.violations == 0
    assert result.passed
    assert result.replay is None
    assert os.listdir(tmp_path) == []


def test_suite_is_seeded():
    suite = SUITES[SUITE_NAMES.index("trig")]
    instances = []

    def record(rng):
        instance, ok = suite.check(rng)
        instances.append(instance)
        return instance, ok

    for _ in range(2):
        run_suite(Suite("trig", 3, record), seed=12)
    assert instances[:3] == instances[3:]


def test_failures_write_a_replay(tmp_path):
    calls = []

    def failing(rng):
        calls.append(1)
        if len(calls) == 2:
            raise RankDeficientError("collapsed")
        return {"value": len(calls)}, False

    result = run_suite(Suite("trig", 4, failing), seed=3, out_dir=str(tmp_path))
    assert result.violations == 4
    assert not result.passed
    assert os.path.basename(result.replay) == "verify-replay-trig.yaml"
    with open(result.replay) as file:
        replay = yaml.safe_load(file)
    assert replay == {"suite": "trig", "seed": 3, "instance_index": 0, "instance": {"value": 1}}


def test_faulhaber_suite_covers_every_case():
    suite = SUITES[SUITE_NAMES.index("faulhaber")]
    assert suite.count == len(FAULHABER_CASES) == 99
    assert run_suite(suite, seed=0).passed


def test_run_verify_selects_suites(tmp_path):
    report = run_verify(["faulhaber", "hilbert"], seed=1, out_dir=str(tmp_path))
    assert [r.name for r in report.results] == ["faulhaber", "hilbert"]
    assert report.passed
    assert report.failed == []


def test_run_verify_rejects_unknown_suites():
    with pytest.raises(InvalidArgumentError):
        run_verify(["faulhaber", "fourier"])


def test_limit_inner_product_suite_reaches_five_node_spaces():
    suite = SUITES[SUITE_NAMES.index("limit-inner-product")]
    instances = []

    def record(rng):
        instance, ok = suite.check(rng)
        instances.append(instance)
        return instance, ok

    assert run_suite(Suite("limit-inner-product", 200, record), seed=0).passed
    assert max(max(i["s1"], i["s2"]) for i in instances) == 5
    assert all(10 <= i["N"] <= 500 for i in instances)
