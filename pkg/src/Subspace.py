import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
from sklearn.linear_model import LinearRegression

from src.Bases import SERIES, SERIES_LIMIT, dd_basis_local, row_phases
from src.Errors import InvalidArgumentError
from src.Linalg import (ComplexMatrix, Spectrum, adjoint, as_matrix, normalize_columns,
                        singular_values, thin_qr)
from src.Nodes import NodeSet, measure_stats, wrap_difference
from src.Vandermonde import VandermondeSpec, build_vandermonde, exponential_matrix

BOUND_RTOL = 1e-10


@dataclass(frozen=True)
class AngleReport:
    min_angle: float
    beta: float
    pair: Tuple[int, int] = (0, 1)


def principal_angle_min(A, B, pair=(0, 1)) -> AngleReport:
    A, B = as_matrix(A), as_matrix(B)
    if A.shape[0] != B.shape[0]:
        raise InvalidArgumentError(f"subspaces live in different dimensions: {A.shape[0]} vs {B.shape[0]}")
    qa, _ = thin_qr(A)
    qb, _ = thin_qr(B)
    cosine = singular_values(adjoint(qa) @ qb).max
    cosine = min(max(cosine, 0.0), 1.0)
    min_angle = math.acos(cosine)
    return AngleReport(min_angle=min_angle, beta=math.pi / 2 - min_angle, pair=tuple(pair))


def cluster_basis(nodes: NodeSet, j, N) -> ComplexMatrix:
    """Unit-column basis of the span of cluster j's Vandermonde columns.

    Narrow clusters (N h <= 1) use the divided-difference basis, which spans the same
    space and stays well conditioned as h -> 0. Phases are taken relative to cluster 0.
    """
    offsets = nodes.local_offsets(j)
    anchor = float(wrap_difference(nodes.anchor(j) - nodes.anchor(0)))
    h = float(np.abs(offsets).max())
    if N * h <= SERIES_LIMIT:
        local = dd_basis_local(offsets, N, SERIES)
    else:
        local = exponential_matrix(nodes.cluster(j), np.arange(N + 1)) * row_phases(-nodes.anchor(j), N)
    return normalize_columns(row_phases(anchor, N) * local)


def cluster_angle_matrix(nodes: NodeSet, N) -> List[AngleReport]:
    if nodes.num_clusters < 2:
        raise InvalidArgumentError("cluster angles need at least two clusters")
    bases = [cluster_basis(nodes, j, N) for j in range(nodes.num_clusters)]
    reports = []
    for j in range(nodes.num_clusters):
        for k in range(j + 1, nodes.num_clusters):
            reports.append(principal_angle_min(bases[j], bases[k], pair=(j, k)))
    return reports


def angle_defect(reports: Sequence[AngleReport]) -> float:
    return max((r.beta for r in reports), default=0.0)


def measured_alpha(nodes: NodeSet, N) -> float:
    if nodes.num_clusters < 2:
        return 0.0
    return angle_defect(cluster_angle_matrix(nodes, N))


@dataclass(frozen=True)
class AngleBoundReport:
    betas: tuple
    inverse_separation: tuple
    bandwidth_size: tuple
    a: float
    b: float
    residual_rms: float
    in_range: bool

    def model(self, N, theta, h):
        return self.a / (N * theta) + self.b * N * h


def angle_bound_check(sweep: Sequence[Tuple[NodeSet, int]]) -> AngleBoundReport:
    """Fit beta ~ a / (N theta) + b N h with non-negative a, b over a sweep of two-cluster samples."""
    if len(sweep) < 2:
        raise InvalidArgumentError("the angle model needs at least two samples")
    betas, inverse, size = [], [], []
    for nodes, N in sweep:
        if nodes.num_clusters != 2:
            raise InvalidArgumentError("the angle model is stated for exactly two clusters")
        stats = measure_stats(nodes)
        betas.append(cluster_angle_matrix(nodes, N)[0].beta)
        inverse.append(1.0 / (N * stats.theta))
        size.append(N * max(stats.h))
    features = np.column_stack([inverse, size])
    model = LinearRegression(fit_intercept=False, positive=True).fit(features, betas)
    residual = np.asarray(betas) - model.predict(features)
    return AngleBoundReport(betas=tuple(betas), inverse_separation=tuple(inverse), bandwidth_size=tuple(size),
                            a=float(model.coef_[0]), b=float(model.coef_[1]),
                            residual_rms=float(np.sqrt(np.mean(residual ** 2))),
                            in_range=all(0 <= b <= math.pi / 2 for b in betas))


def block_columns(nodes: NodeSet, V):
    return [V[:, list(block)] for block in nodes.blocks]


def block_qr(nodes: NodeSet, N):
    V = build_vandermonde(VandermondeSpec(nodes, N))
    factors = [thin_qr(block) for block in block_columns(nodes, V)]
    Q = torch.cat([q for q, _ in factors], dim=1)
    return Q, [r for _, r in factors]


def block_diagonal(blocks) -> ComplexMatrix:
    return torch.block_diag(*blocks)


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    full: Spectrum
    union: Spectrum
    alpha: float
    ratios: tuple
    bounds_ok: Optional[bool]
    q_bounds_ok: Optional[bool] = None

    @property
    def applicable(self):
        return self.bounds_ok is not None


def union_spectrum(nodes: NodeSet, V) -> Spectrum:
    pooled = np.concatenate([singular_values(block).values for block in block_columns(nodes, V)])
    return Spectrum(np.sort(pooled, kind="stable")[::-1].copy())


def union_spectrum_compare(nodes: NodeSet, N, alpha=None) -> SpectrumReport:
    V = build_vandermonde(VandermondeSpec(nodes, N))
    full = singular_values(V)
    union = union_spectrum(nodes, V)
    if alpha is None:
        alpha = measured_alpha(nodes, N)
    ratios = tuple(float(v) for v in full.values / union.values)

    s = nodes.size
    if s * alpha > 1:
        return SpectrumReport(full=full, union=union, alpha=alpha, ratios=ratios, bounds_ok=None)

    lower, upper = math.sqrt(1 - s * alpha), math.sqrt(1 + s * alpha)
    bounds_ok = all(lower * (1 - BOUND_RTOL) <= r <= upper * (1 + BOUND_RTOL) for r in ratios)
    Q, _ = block_qr(nodes, N)
    q_values = singular_values(Q)
    q_bounds_ok = lower * (1 - BOUND_RTOL) <= q_values.min and q_values.max <= upper * (1 + BOUND_RTOL)
    return SpectrumReport(full=full, union=union, alpha=alpha, ratios=ratios,
                          bounds_ok=bool(bounds_ok), q_bounds_ok=bool(q_bounds_ok))
