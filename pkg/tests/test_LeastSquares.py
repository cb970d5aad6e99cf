import math

import numpy as np
import pytest

from src.Errors import InvalidArgumentError, RankDeficientError
from src.LeastSquares import (cluster_widths, componentwise_solve, perturbation_experiment, pinv_row_l1,
                              predicted_scales, row_l1_norms, row_norm_product_bound_check)
from src.Linalg import random_matrix
from src.Nodes import ClusterConfig, ClusterSpec, NodeSet, generate_multi_cluster
from src.Utils import fit_loglog, log_uniform
from src.Vandermonde import VandermondeSpec, build_vandermonde


def clusters(h, sizes=(2, 3, 1), centers=(0.5, 0.5 + 2 * math.pi / 3, 0.5 - 2 * math.pi / 3)):
    specs = tuple(ClusterSpec(c, h if s > 1 else 0.0, s) for c, s in zip(centers, sizes))
    return generate_multi_cluster(ClusterConfig(specs, 2 * math.pi / len(sizes) - h))


def test_single_node_row_norm():
    report = pinv_row_l1(NodeSet([0.3]), 2)
    assert report.norms == pytest.approx((1.0,))
    assert report.predicted == (1.0,)


def test_roots_of_unity_row_norms():
    N = 9
    nodes = NodeSet(2 * math.pi * np.array([0, 3, 7]) / (N + 1) - math.pi)
    report = pinv_row_l1(nodes, N)
    np.testing.assert_allclose(report.norms, 1.0, rtol=1e-12)


def test_row_norms_follow_cluster_sizes():
    N = 400
    nh = [1e-3, 1e-2, 1e-1]
    pairs = [clusters(v / N, sizes=(2, 1), centers=(0.5, 0.5 + math.pi)) for v in nh]
    norms = np.array([pinv_row_l1(nodes, N).norms for nodes in pairs])
    doubleton = fit_loglog(nh, norms[:, 0]).slope
    singleton = fit_loglog(nh, norms[:, 2]).slope
    assert doubleton == pytest.approx(-1.0, abs=0.1)
    assert singleton == pytest.approx(0.0, abs=0.1)


def test_predicted_scales_and_widths():
    nodes = clusters(1e-4)
    N = 100
    assert cluster_widths(nodes) == pytest.approx((1e-4, 1e-4, 0.0))
    scales = predicted_scales(nodes, N)
    assert scales[:2] == pytest.approx((100.0, 100.0))
    assert scales[2:5] == pytest.approx((1e4, 1e4, 1e4))
    assert scales[5] == 1.0


def test_row_norm_product_bound():
    rng = np.random.default_rng(1)
    for shape in [(4, 3, 2), (1, 5, 6), (6, 1, 1)]:
        m, p, n = shape
        assert row_norm_product_bound_check(random_matrix(m, p, rng), random_matrix(p, n, rng)).passed
    with pytest.raises(InvalidArgumentError):
        row_norm_product_bound_check(random_matrix(2, 3, rng), random_matrix(2, 3, rng))


def test_row_l1_norms():
    np.testing.assert_allclose(row_l1_norms(np.array([[1.0, -2.0], [3j, 4.0]])), [3.0, 7.0])


def test_componentwise_solve_recovers_coefficients():
    nodes = clusters(1e-2 / 200)
    N = 200
    a0 = np.arange(1, nodes.size + 1, dtype=complex)
    b = build_vandermonde(VandermondeSpec(nodes, N)).numpy() @ a0
    solution = componentwise_solve(nodes, N, b)
    np.testing.assert_allclose(solution.a, a0, rtol=1e-5)
    assert solution.clusters == (0, 0, 1, 1, 1, 2)
    assert len(solution.bound_shape) == nodes.size


def test_perturbation_experiment_holder_chain():
    nodes = clusters(0.01 / 500)
    result = perturbation_experiment(nodes, 500, 1e-4, seed=3)
    assert result.holder_ok
    assert result.defined
    assert result.in_regime
    assert len(result.delta_a) == nodes.size
    assert all(v >= 0 for v in result.delta_a)
    assert result.seed == 3


def test_perturbation_experiment_is_seeded():
    nodes = clusters(0.01 / 500)
    first = perturbation_experiment(nodes, 500, 1e-4, seed=9)
    second = perturbation_experiment(nodes, 500, 1e-4, seed=9)
    assert first.delta_a == second.delta_a


def test_perturbation_without_noise_is_undefined():
    result = perturbation_experiment(clusters(0.01 / 300), 300, 0.0, seed=1)
    assert not result.defined
    assert result.noise_norm == 0.0
    with pytest.raises(InvalidArgumentError):
        perturbation_experiment(clusters(0.01 / 300), 300, -1.0)


def test_rank_deficient_system():
    with pytest.raises(RankDeficientError):
        pinv_row_l1(NodeSet([0.1, 0.1 + 1e-15, 1.0]), 10)


def test_componentwise_slopes():
    rng = np.random.default_rng(7)
    nh, deltas = [], []
    for _ in range(100):
        N = int(round(log_uniform(rng, 100, 5000)))
        h = log_uniform(rng, 1e-3, 1e-1) / N
        result = perturbation_experiment(clusters(h), N, log_uniform(rng, 1e-6, 1e-3),
                                         seed=int(rng.integers(2 ** 32)))
        if result.in_regime and N * h / 2 < 1:
            nh.append(N * h)
            deltas.append(result.delta_a)
    deltas = np.asarray(deltas)
    slopes = [fit_loglog(nh, deltas[:, j]).slope for j in range(deltas.shape[1])]
    np.testing.assert_allclose(slopes, [-1, -1, -2, -2, -2, 0], atol=0.2)
