"""Divided differences, the divided-difference basis W and the limit basis U of a cluster."""
import math
from dataclasses import dataclass
from typing import List

import numpy as np
import torch

from src.Errors import InvalidArgumentError
from src.Linalg import (REAL_DTYPE, ComplexMatrix, adjoint, as_matrix, hermitian_eigs,
                        normalize_columns, singular_values, to_numpy)
from src.Nodes import NodeSet, wrap_difference, wrap_distance

MIN_SPACING = 1e-12
SERIES_TERMS = 40
SERIES_LIMIT = 1.0
BOUND_RTOL = 1e-12

RECURSIVE = "recursive"
SERIES = "series"
AUTO = "auto"


def _evaluate(f, t):
    return np.asarray(f(t), dtype=complex)


def _checked_points(points):
    points = np.asarray(points, dtype=float).reshape(-1)
    if points.size == 0:
        raise InvalidArgumentError("divided differences need at least one point")
    if not np.all(np.isfinite(points)):
        raise InvalidArgumentError("divided difference points must be finite")
    ordered = np.sort(points, kind="stable")
    if ordered.size > 1 and np.diff(ordered).min() < MIN_SPACING:
        raise InvalidArgumentError(
            "divided difference points must be distinct with spacing >= 1e-12; "
            "use the limit basis for confluent points")
    return ordered


@dataclass(frozen=True, eq=False)
class DividedDifferenceTable:
    """Triangular table, ``values[r][i]`` = [t_i, ..., t_{i+r}] f over ascending points."""

    points: np.ndarray
    values: List[np.ndarray]

    @classmethod
    def build(cls, points, f):
        points = _checked_points(points)
        column = [_evaluate(f, t) for t in points]
        values = [np.array(column)]
        for r in range(1, points.size):
            previous = values[-1]
            spans = points[r:] - points[:-r]
            shape = (-1,) + (1,) * (previous.ndim - 1)
            values.append((previous[1:] - previous[:-1]) / spans.reshape(shape))
        return cls(points, values)

    @property
    def value(self):
        top = self.values[-1][0]
        return complex(top) if np.ndim(top) == 0 else top

    def newton_coefficients(self):
        return [level[0] for level in self.values]


def divided_difference(points, f):
    return DividedDifferenceTable.build(points, f).value


def explicit_divided_difference(points, f):
    """Distinct-node closed form sum_j f(t_j) / prod_{k != j} (t_j - t_k)."""
    points = _checked_points(points)
    total = 0
    for j, t in enumerate(points):
        others = np.delete(points, j)
        total = total + _evaluate(f, t) / np.prod(t - others)
    return complex(total) if np.ndim(total) == 0 else total


def interpolation_leading_coefficient(points, f):
    """Leading monomial coefficient of the interpolating polynomial, by solving the linear system."""
    points = _checked_points(points)
    n = points.size
    center = points.mean()
    scale = max(np.abs(points - center).max(), 1.0)
    shifted = (points - center) / scale
    system = np.vander(shifted, n, increasing=True)
    values = np.array([_evaluate(f, t) for t in points], dtype=complex)
    coefficients = np.linalg.solve(system, values)
    return complex(coefficients[-1] / scale ** (n - 1))


def _complete_homogeneous(values, terms):
    """table[j, q] = h_q(values[0], ..., values[j])."""
    table = np.zeros((len(values), terms))
    previous = np.zeros(terms)
    for j, v in enumerate(values):
        current = np.zeros(terms)
        current[0] = 1.0
        for q in range(1, terms):
            current[q] = previous[q] + v * current[q - 1]
        table[j] = current
        previous = current
    return table


def exp_divided_differences(offsets, k, terms=SERIES_TERMS) -> np.ndarray:
    """Column j holds j! [d_0, ..., d_j] e^{ik.} summed as a power series in the offsets.

    [d_0..d_j] e^{ikt} = sum_q (ik)^{q+j} h_q(d_0..d_j) / (q+j)!, free of cancellation while k|d| <= 1.
    """
    offsets = np.asarray(offsets, dtype=float).reshape(-1)
    k = np.asarray(k, dtype=float).reshape(-1)
    diameter = float(np.abs(offsets).max())
    if offsets.size > 1 and diameter == 0:
        raise InvalidArgumentError("cluster offsets must be distinct")
    scaled = offsets / diameter if diameter > 0 else offsets
    homogeneous = _complete_homogeneous(scaled, terms)
    z = 1j * k * diameter
    result = np.empty((k.size, offsets.size), dtype=complex)
    for j in range(offsets.size):
        weights = np.exp([math.lgamma(j + 1) - math.lgamma(q + j + 1) for q in range(terms)])
        coefficients = weights * homogeneous[j]
        series = np.full(k.size, coefficients[-1], dtype=complex)
        for q in range(terms - 2, -1, -1):
            series = series * z + coefficients[q]
        leading = np.ones(k.size, dtype=complex) if j == 0 else (1j * k) ** j
        result[:, j] = leading * series
    return result


def row_phases(angle, N) -> ComplexMatrix:
    k = torch.arange(N + 1, dtype=REAL_DTYPE)
    return torch.polar(torch.ones_like(k), k * angle).reshape(-1, 1)


def dd_basis_local(offsets, N, method=AUTO) -> ComplexMatrix:
    """Divided-difference basis of a cluster anchored at its first node (anchor phase removed)."""
    offsets = np.asarray(offsets, dtype=float).reshape(-1)
    if N < offsets.size - 1:
        raise InvalidArgumentError(f"N = {N} is too small for {offsets.size} nodes")
    if method == AUTO:
        method = SERIES if N * np.abs(offsets).max() <= SERIES_LIMIT else RECURSIVE
    k = np.arange(N + 1, dtype=float)
    if method == SERIES:
        return as_matrix(exp_divided_differences(offsets, k))
    if method != RECURSIVE:
        raise InvalidArgumentError(f"unknown divided difference method '{method}'")
    columns = []
    for j in range(offsets.size):
        value = divided_difference(offsets[:j + 1], lambda t: np.exp(1j * k * t))
        columns.append(math.factorial(j) * np.asarray(value))
    return as_matrix(np.stack(columns, axis=1))


def _single_cluster(nodes: NodeSet):
    if nodes.num_clusters != 1:
        raise InvalidArgumentError(f"expected one cluster, got {nodes.num_clusters}")
    return nodes.local_offsets(0), nodes.anchor(0)


def dd_basis(nodes: NodeSet, N, method=AUTO) -> ComplexMatrix:
    offsets, anchor = _single_cluster(nodes)
    return row_phases(anchor, N) * dd_basis_local(offsets, N, method)


def limit_basis(zeta, N, s) -> ComplexMatrix:
    if N < s - 1:
        raise InvalidArgumentError(f"N = {N} is too small for a limit basis of size {s}")
    k = np.arange(N + 1, dtype=float)
    columns = [np.ones(N + 1, dtype=complex) if j == 0 else (1j * k) ** j for j in range(s)]
    return row_phases(zeta, N) * as_matrix(np.stack(columns, axis=1))


@dataclass(frozen=True, eq=False)
class BasisMatrices:
    W: ComplexMatrix
    U: ComplexMatrix
    W_tilde: ComplexMatrix
    U_tilde: ComplexMatrix


def build_bases(nodes: NodeSet, N, zeta=None, method=AUTO) -> BasisMatrices:
    offsets, anchor = _single_cluster(nodes)
    zeta = anchor if zeta is None else zeta
    W = dd_basis(nodes, N, method)
    U = limit_basis(zeta, N, offsets.size)
    return BasisMatrices(W=W, U=U, W_tilde=normalize_columns(W), U_tilde=normalize_columns(U))


@dataclass(frozen=True)
class NormBoundsReport:
    norms: tuple
    lower: tuple
    upper: tuple
    passed: bool

    @property
    def lower_margins(self):
        return tuple(n / lo for n, lo in zip(self.norms, self.lower))

    @property
    def upper_margins(self):
        return tuple(up / n for n, up in zip(self.norms, self.upper))


def column_norm_bounds_check(U, N, s) -> NormBoundsReport:
    """N^{j-1/2} / sqrt(2s-1) <= ||u_j|| <= N^{j-1/2}; for j = 1 the upper bound is sqrt(N+1)."""
    norms = to_numpy(torch.linalg.vector_norm(as_matrix(U), dim=0))
    lower, upper = [], []
    for j in range(1, s + 1):
        lower.append(N ** (j - 0.5) / math.sqrt(2 * s - 1))
        upper.append(math.sqrt(N + 1) if j == 1 else N ** (j - 0.5))
    passed = all(lo <= n * (1 + BOUND_RTOL) and n <= up * (1 + BOUND_RTOL)
                 for n, lo, up in zip(norms, lower, upper))
    return NormBoundsReport(norms=tuple(float(n) for n in norms), lower=tuple(lower),
                            upper=tuple(upper), passed=passed)


@dataclass(frozen=True)
class DeviationReport:
    deviations: tuple
    bound: float
    passed: bool

    @property
    def max_deviation(self):
        return max(self.deviations)


def basis_deviation_check(nodes: NodeSet, N, zeta=None, method=AUTO) -> DeviationReport:
    offsets, anchor = _single_cluster(nodes)
    h = float(np.abs(offsets[:, None] - offsets[None, :]).max())
    shift = 0.0 if zeta is None else float(wrap_difference(zeta - anchor))
    W_tilde = normalize_columns(dd_basis_local(offsets, N, method))
    U_tilde = normalize_columns(limit_basis(shift, N, offsets.size))
    deviations = to_numpy(torch.linalg.vector_norm(U_tilde - W_tilde, dim=0))
    bound = 2 * math.sqrt(2) * N * h
    passed = bool(np.all(deviations <= bound * (1 + BOUND_RTOL) + 1e-13))
    return DeviationReport(deviations=tuple(float(d) for d in deviations), bound=bound, passed=passed)


def hilbert_normalized(s) -> ComplexMatrix:
    if s < 1:
        raise InvalidArgumentError(f"the normalized Hilbert matrix needs s >= 1, got {s}")
    j = np.arange(1, s + 1, dtype=float)
    roots = np.sqrt(2 * j - 1)
    return as_matrix(np.outer(roots, roots) / (j[:, None] + j[None, :] - 1))


def hilbert_min_eigenvalue(s) -> float:
    return float(hermitian_eigs(hilbert_normalized(s))[0])


@dataclass(frozen=True)
class LimitConditioningReport:
    sigma_min: float
    threshold: float
    limit: float
    exceeds: bool

    @property
    def gap(self):
        return abs(self.sigma_min - self.limit)


def limit_conditioning_check(zeta, N, s) -> LimitConditioningReport:
    sigma_min = singular_values(normalize_columns(limit_basis(zeta, N, s))).min
    lam = hilbert_min_eigenvalue(s)
    threshold = math.sqrt(lam / 2)
    return LimitConditioningReport(sigma_min=sigma_min, threshold=threshold,
                                   limit=math.sqrt(lam), exceeds=sigma_min >= threshold)


@dataclass(frozen=True)
class InnerProductReport:
    max_inner: float
    bound: float
    passed: bool


def limit_inner_product_check(zeta1, s1, zeta2, s2, N) -> InnerProductReport:
    distance = float(wrap_distance(zeta1, zeta2))
    if distance == 0:
        raise InvalidArgumentError("limit spaces must be anchored at different points")
    if N < 1:
        raise InvalidArgumentError(f"the inner product bound needs N >= 1, got {N}")
    if N < max(s1, s2) - 1:
        raise InvalidArgumentError(f"N = {N} is too small for limit bases of sizes {s1}, {s2}")
    # rotate so the first anchor sits at zero, inner products only see the difference
    first = normalize_columns(limit_basis(0.0, N, s1))
    second = normalize_columns(limit_basis(float(wrap_difference(zeta2 - zeta1)), N, s2))
    max_inner = float(torch.abs(adjoint(first) @ second).max())
    bound = math.pi * math.sqrt((2 * s1 - 1) * (2 * s2 - 1)) / (distance * N)
    return InnerProductReport(max_inner=max_inner, bound=bound, passed=max_inner <= bound * (1 + BOUND_RTOL))
