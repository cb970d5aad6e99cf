import math

import numpy as np
import pytest
import torch

from src.Bases import row_phases
from src.Errors import InvalidArgumentError
from src.Linalg import DTYPE, frobenius_norm, random_matrix, singular_values
from src.Nodes import ClusterConfig, ClusterSpec, NodeSet, generate_multi_cluster
from src.Subspace import (angle_bound_check, block_diagonal, block_qr, cluster_angle_matrix, cluster_basis,
                          measured_alpha, principal_angle_min, union_spectrum_compare)
from src.Vandermonde import VandermondeSpec, build_vandermonde


def two_clusters(theta, h, sizes=(4, 2)):
    first, second = sizes
    specs = (ClusterSpec(0.0, h if first > 1 else 0.0, first),
             ClusterSpec(theta + h, h if second > 1 else 0.0, second))
    return generate_multi_cluster(ClusterConfig(specs, theta))


def test_principal_angle_of_identical_and_orthogonal_spaces():
    rng = np.random.default_rng(3)
    A = random_matrix(6, 2, rng)
    same = principal_angle_min(A, A @ random_matrix(2, 2, rng))
    assert same.beta == pytest.approx(math.pi / 2)
    e = torch.eye(4, dtype=DTYPE)
    orthogonal = principal_angle_min(e[:, :2], e[:, 2:])
    assert orthogonal.min_angle == pytest.approx(math.pi / 2)
    assert orthogonal.beta == pytest.approx(0.0, abs=1e-15)


def test_principal_angle_dimension_mismatch():
    e = torch.eye(4, dtype=DTYPE)
    with pytest.raises(InvalidArgumentError):
        principal_angle_min(e[:, :2], torch.eye(3, dtype=DTYPE))


def test_orthogonal_roots_of_unity_clusters():
    N = 7
    nodes = NodeSet(2 * math.pi * np.array([0, 1, 4, 5]) / (N + 1), partition=((0, 1), (2, 3)))
    assert cluster_angle_matrix(nodes, N)[0].beta == pytest.approx(0.0, abs=1e-12)


def test_cluster_basis_spans_the_cluster_columns():
    nodes = two_clusters(1.0, 1e-4)
    N = 300
    # bases carry phases relative to the first cluster anchor
    V = row_phases(-nodes.anchor(0), N) * build_vandermonde(VandermondeSpec(nodes, N))
    for j, block in enumerate(nodes.blocks):
        basis = cluster_basis(nodes, j, N)
        columns = V[:, list(block)]
        fit = torch.linalg.lstsq(basis, columns).solution
        assert frobenius_norm(basis @ fit - columns) <= 1e-8 * frobenius_norm(columns)


def test_beta_decays_with_bandwidth():
    betas = [cluster_angle_matrix(two_clusters(1.0, 1e-10 / N), N)[0].beta for N in (100, 1000, 10_000)]
    assert betas[0] > betas[1] > betas[2] > 0
    assert math.log10(betas[0] / betas[2]) / 2 == pytest.approx(1.0, abs=0.1)


def test_measured_alpha_single_cluster_is_zero():
    nodes = generate_multi_cluster(ClusterConfig((ClusterSpec(0.0, 0.01, 3),), math.pi))
    assert measured_alpha(nodes, 50) == 0.0


def test_angle_bound_check_fits_non_negative_model():
    sweep = [(two_clusters(1.0, 1e-8 / N), N) for N in (100, 300, 1000, 3000)]
    report = angle_bound_check(sweep)
    assert report.a >= 0 and report.b >= 0
    assert report.in_range
    assert report.a > 0
    with pytest.raises(InvalidArgumentError):
        angle_bound_check(sweep[:1])


def test_block_qr_reconstructs():
    nodes = generate_multi_cluster(ClusterConfig(
        (ClusterSpec(0.0, 0.01, 2), ClusterSpec(2.0, 0.0, 1), ClusterSpec(-2.0, 0.01, 3)), theta=1.5))
    N = 200
    Q, blocks = block_qr(nodes, N)
    V = build_vandermonde(VandermondeSpec(nodes, N))
    assert [b.shape for b in blocks] == [(2, 2), (1, 1), (3, 3)]
    assert frobenius_norm(Q @ block_diagonal(blocks) - V) <= 1e-10 * frobenius_norm(V)


def test_union_spectrum_bounds_hold_for_separated_clusters():
    nodes = generate_multi_cluster(ClusterConfig(
        (ClusterSpec(0.5, 2e-5, 2), ClusterSpec(2.0, 0.0, 1), ClusterSpec(-2.5, 2e-5, 3)), theta=1.0))
    report = union_spectrum_compare(nodes, 500)
    assert report.applicable
    assert nodes.size * report.alpha <= 1
    assert report.bounds_ok
    assert report.q_bounds_ok
    assert len(report.ratios) == nodes.size


def test_union_spectrum_reports_only_outside_the_regime():
    nodes = two_clusters(0.05, 0.01, sizes=(3, 3))
    report = union_spectrum_compare(nodes, 20, alpha=1.0)
    assert not report.applicable
    assert report.bounds_ok is None
    assert len(report.full) == 6
    assert singular_values(build_vandermonde(VandermondeSpec(nodes, 20))).max == pytest.approx(report.full.max)
