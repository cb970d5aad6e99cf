import math

import numpy as np
import pytest

from src.Errors import DegenerateClusterError, InfeasibleLayoutError, InvalidArgumentError
from src.Nodes import (EQUISPACED, UNIFORM_RANDOM, ClusterConfig, ClusterSpec, NodeSet, concatenate,
                       generate_cluster, generate_multi_cluster, measure_stats, wrap_angle, wrap_distance)


@pytest.mark.parametrize("angle, expected", [
    (0.0, 0.0),
    (math.pi, math.pi),
    (-math.pi, math.pi),
    (2 * math.pi + 0.25, 0.25),
    (-0.5, -0.5),
])
def test_wrap_angle(angle, expected):
    assert wrap_angle(angle) == pytest.approx(expected, abs=1e-12)


def test_wrap_angle_keeps_small_angles_exact():
    assert wrap_angle(1e-300) == 1e-300


def test_wrap_distance_is_symmetric_across_pi():
    assert wrap_distance(3.1, -3.1) == pytest.approx(2 * math.pi - 6.2)
    assert wrap_distance(-3.1, 3.1) == pytest.approx(2 * math.pi - 6.2)
    with pytest.raises(InvalidArgumentError):
        wrap_distance(float("nan"), 0.0)


def test_nodeset_rejects_duplicates_and_bad_partitions():
    with pytest.raises(InvalidArgumentError):
        NodeSet([0.1, 0.1])
    with pytest.raises(InvalidArgumentError):
        NodeSet([0.1, 0.2], partition=((0,),))
    with pytest.raises(InvalidArgumentError):
        NodeSet([0.1, 0.2], partition=((0, 1), ()))
    with pytest.raises(InvalidArgumentError):
        NodeSet([])


def test_nodeset_angles_are_readonly():
    nodes = NodeSet([0.1, 0.2])
    with pytest.raises(ValueError):
        nodes.angles[0] = 0.5


def test_equispaced_cluster_layout():
    nodes = generate_cluster(0.3, 0.01, 4, EQUISPACED)
    np.testing.assert_allclose(nodes.offsets, [0, 0.01 / 3, 0.02 / 3, 0.01], rtol=1e-15)
    stats = measure_stats(nodes)
    assert stats.h[0] == pytest.approx(0.01, rel=1e-12)
    assert stats.tau[0] == pytest.approx(1 / 3, rel=1e-12)
    assert math.isinf(stats.theta)


def test_cluster_keeps_sub_ulp_width():
    nodes = generate_cluster(2.0, 1e-18, 3)
    assert nodes.offsets[-1] == pytest.approx(1e-18, rel=1e-12)
    assert measure_stats(nodes).h[0] == pytest.approx(1e-18, rel=1e-12)


def test_singleton_cluster():
    nodes = generate_cluster(1.0, 0.0, 1)
    stats = measure_stats(nodes)
    assert stats.h == (0.0,)
    assert stats.tau == (None,)


def test_random_layout_honours_minimal_ratio():
    nodes = generate_cluster(-1.0, 0.05, 5, UNIFORM_RANDOM, rng_seed=7, tau_min=0.1)
    stats = measure_stats(nodes)
    assert stats.tau[0] >= 0.1
    assert stats.h[0] <= 0.05


def test_random_layout_is_reproducible():
    first = generate_cluster(0.0, 0.1, 4, UNIFORM_RANDOM, rng_seed=11)
    second = generate_cluster(0.0, 0.1, 4, UNIFORM_RANDOM, rng_seed=11)
    np.testing.assert_array_equal(first.angles, second.angles)


def test_cluster_errors():
    with pytest.raises(DegenerateClusterError):
        generate_cluster(0.0, 0.0, 3)
    with pytest.raises(InfeasibleLayoutError):
        generate_cluster(0.0, 0.1, 12, UNIFORM_RANDOM, tau_min=0.1)
    with pytest.raises(InvalidArgumentError):
        generate_cluster(0.0, 0.1, 2, "zigzag")


def test_multi_cluster_separation():
    config = ClusterConfig((ClusterSpec(0.0, 0.01, 2), ClusterSpec(1.0, 0.0, 1), ClusterSpec(2.5, 0.01, 3)),
                           theta=0.9)
    nodes = generate_multi_cluster(config, rng_seed=0)
    assert nodes.multiplicities == (2, 1, 3)
    assert nodes.partition == ((0, 1), (2,), (3, 4, 5))
    stats = measure_stats(nodes)
    assert stats.theta >= 0.9
    assert stats.h[0] == pytest.approx(0.01)
    assert stats.eta == pytest.approx(0.01 / 2)


def test_multi_cluster_infeasible():
    too_close = ClusterConfig((ClusterSpec(0.0, 0.1, 2), ClusterSpec(0.5, 0.1, 2)), theta=1.0)
    with pytest.raises(InfeasibleLayoutError):
        generate_multi_cluster(too_close)
    too_wide = ClusterConfig((ClusterSpec(0.0, 0.1, 2), ClusterSpec(3.0, 0.1, 2)), theta=3.5)
    with pytest.raises(InfeasibleLayoutError):
        generate_multi_cluster(too_wide)


def test_differences_are_exact_inside_clusters():
    config = ClusterConfig((ClusterSpec(1.0, 1e-17, 2), ClusterSpec(-1.0, 1e-17, 2)), theta=1.5)
    nodes = generate_multi_cluster(config)
    differences = nodes.differences()
    assert differences[1, 0] == pytest.approx(1e-17, rel=1e-12)
    assert abs(differences[2, 0]) == pytest.approx(2.0, rel=1e-12)


def test_concatenate_builds_partition():
    first = generate_cluster(0.0, 0.01, 2)
    second = generate_cluster(2.0, 0.0, 1)
    nodes = concatenate([first, second])
    assert nodes.partition == ((0, 1), (2,))
    assert nodes.cluster(0).size == 2
    np.testing.assert_array_equal(nodes.local_offsets(0), first.offsets)
