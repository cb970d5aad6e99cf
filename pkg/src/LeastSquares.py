import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from src.Errors import InvalidArgumentError
from src.Linalg import as_matrix, lstsq_solve, pseudoinverse, singular_values, to_numpy
from src.Nodes import NodeSet
from src.Vandermonde import VandermondeSpec, build_vandermonde

KAPPA_LIMIT = 1e12
HOLDER_RTOL = 1e-10
MACHINE_EPS = float(np.finfo(float).eps)


def cluster_widths(nodes: NodeSet):
    distances = np.abs(nodes.differences())
    return tuple(float(distances[np.ix_(block, block)].max()) for block in nodes.blocks)


def predicted_scales(nodes: NodeSet, N):
    """(1 / (N h_j))^{s_j - 1} for the cluster of every node; 1 for singletons."""
    scales = np.empty(nodes.size)
    for block, h in zip(nodes.blocks, cluster_widths(nodes)):
        s = len(block)
        scales[list(block)] = 1.0 if s == 1 else (1.0 / (N * h)) ** (s - 1)
    return tuple(float(v) for v in scales)


@dataclass(frozen=True)
class RowNormReport:
    norms: tuple
    predicted: tuple
    clusters: tuple


def row_l1_norms(A) -> np.ndarray:
    return to_numpy(torch.abs(as_matrix(A)).sum(dim=1))


def pinv_row_l1(nodes: NodeSet, N) -> RowNormReport:
    V = build_vandermonde(VandermondeSpec(nodes, N))
    norms = row_l1_norms(pseudoinverse(V))
    return RowNormReport(norms=tuple(float(v) for v in norms), predicted=predicted_scales(nodes, N),
                         clusters=tuple(int(c) for c in nodes.cluster_labels()))


@dataclass(frozen=True)
class RowProductReport:
    row_norms: tuple
    bounds: tuple
    passed: bool


def row_norm_product_bound_check(B, C) -> RowProductReport:
    """||(BC)_k||_1 <= sqrt(p n) max_j |B_kj| ||C||_F for every row k."""
    B, C = as_matrix(B), as_matrix(C)
    if B.shape[1] != C.shape[0]:
        raise InvalidArgumentError(f"shapes {tuple(B.shape)} and {tuple(C.shape)} are not conformable")
    p, n = C.shape
    row_norms = row_l1_norms(B @ C)
    row_max = to_numpy(torch.abs(B).amax(dim=1))
    frobenius = float(torch.linalg.matrix_norm(C))
    bounds = math.sqrt(p * n) * row_max * frobenius
    passed = bool(np.all(row_norms <= bounds * (1 + HOLDER_RTOL)))
    return RowProductReport(row_norms=tuple(float(v) for v in row_norms),
                            bounds=tuple(float(v) for v in bounds), passed=passed)


@dataclass(frozen=True, eq=False)
class ComponentwiseSolution:
    a: np.ndarray
    bound_shape: tuple
    clusters: tuple


def componentwise_solve(nodes: NodeSet, N, b) -> ComponentwiseSolution:
    """a = V_N^+ b with the bound shape s (1 / (N h_j))^{s_j - 1} attached to each component."""
    V = build_vandermonde(VandermondeSpec(nodes, N))
    a = to_numpy(lstsq_solve(V, np.asarray(b, dtype=complex).reshape(-1)))
    shape = tuple(nodes.size * v for v in predicted_scales(nodes, N))
    return ComponentwiseSolution(a=a, bound_shape=shape, clusters=tuple(int(c) for c in nodes.cluster_labels()))


@dataclass(frozen=True)
class PerturbationResult:
    delta_a: tuple
    N: int
    h: tuple
    eps_noise: float
    seed: Optional[int]
    kappa: float
    noise_norm: float
    row_l1: tuple
    clusters: tuple
    holder_ok: bool

    @property
    def in_regime(self):
        return self.kappa <= KAPPA_LIMIT

    @property
    def defined(self):
        return self.noise_norm > 0


def perturbation_experiment(nodes: NodeSet, N, eps_noise, seed=None, complex_noise=False) -> PerturbationResult:
    """Solve with b = V a_0 + eps f for uniform [0, 1] entries of a_0 and f.

    delta_a is |a - a_0| divided by ||b - b_0||_inf; without noise the raw difference is returned
    and the result is marked undefined.
    """
    if not (math.isfinite(eps_noise) and eps_noise >= 0):
        raise InvalidArgumentError(f"noise level must be finite and non-negative, got {eps_noise}")
    rng = np.random.default_rng(seed)
    s = nodes.size
    a0 = rng.uniform(0.0, 1.0, size=s).astype(complex)
    f = rng.uniform(0.0, 1.0, size=N + 1).astype(complex)
    if complex_noise:
        f = f + 1j * rng.uniform(0.0, 1.0, size=N + 1)

    V = build_vandermonde(VandermondeSpec(nodes, N))
    kappa = singular_values(V).condition_number
    b0 = to_numpy(V @ as_matrix(a0)).reshape(-1)
    b = b0 + eps_noise * f
    a = to_numpy(lstsq_solve(V, b))

    difference = np.abs(a - a0)
    noise_norm = float(np.abs(b - b0).max())
    row_l1 = row_l1_norms(pseudoinverse(V))
    # the consistent part is only recovered to about kappa times machine precision
    slack = kappa * MACHINE_EPS * float(np.abs(a0).max())
    holder_ok = bool(np.all(difference <= row_l1 * noise_norm * (1 + HOLDER_RTOL) + slack))
    delta_a = difference / noise_norm if noise_norm > 0 else difference

    return PerturbationResult(delta_a=tuple(float(v) for v in delta_a), N=int(N), h=cluster_widths(nodes),
                              eps_noise=float(eps_noise), seed=seed if isinstance(seed, int) else None,
                              kappa=kappa, noise_norm=noise_norm, row_l1=tuple(float(v) for v in row_l1),
                              clusters=tuple(int(c) for c in nodes.cluster_labels()), holder_ok=holder_ok)
