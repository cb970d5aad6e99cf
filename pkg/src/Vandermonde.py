import math
from dataclasses import dataclass

import numpy as np
import torch

from src.Errors import InvalidArgumentError, OutOfRegimeError
from src.Linalg import REAL_DTYPE, ComplexMatrix, as_matrix
from src.Nodes import NodeSet, wrap_difference

DIRICHLET_SWITCH = 1e-9
DEFAULT_TAYLOR_ORDER = 30


@dataclass(frozen=True, eq=False)
class VandermondeSpec:
    nodes: NodeSet
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise InvalidArgumentError(f"bandwidth N must be a non-negative integer, got {self.N}")
        if self.N < self.nodes.size - 1:
            raise InvalidArgumentError(
                f"N = {self.N} is too small for {self.nodes.size} nodes (need N >= s - 1)")
        object.__setattr__(self, "N", int(self.N))


@dataclass(frozen=True, eq=False)
class GramSpec:
    """Single-cluster Gram data with N = 2M, epsilon = M h and rescaled nodes y = x / h."""

    nodes: NodeSet
    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise InvalidArgumentError(f"half-bandwidth M must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @classmethod
    def from_bandwidth(cls, nodes, N):
        if N % 2:
            raise InvalidArgumentError(f"the centered factorisation needs an even bandwidth, got N = {N}")
        return cls(nodes, N // 2)

    @property
    def N(self):
        return 2 * self.M

    @property
    def h(self):
        return float(np.abs(self.nodes.differences()).max())

    @property
    def epsilon(self):
        return self.M * self.h

    @property
    def y(self):
        h = self.h
        first = self.nodes.differences()[:, 0]
        return first / h if h > 0 else np.zeros_like(first)


def exponential_matrix(nodes: NodeSet, k) -> ComplexMatrix:
    """Entries e^{i k x_j}, evaluated as e^{i k anchor} e^{i k offset} per cluster."""
    k = torch.as_tensor(np.asarray(k, dtype=float), dtype=REAL_DTYPE)
    anchors = torch.as_tensor(nodes.node_anchors(), dtype=REAL_DTYPE)
    offsets = torch.as_tensor(nodes.node_offsets(), dtype=REAL_DTYPE)
    coarse = torch.outer(k, anchors)
    fine = torch.outer(k, offsets)
    ones = torch.ones_like(coarse)
    return torch.polar(ones, coarse) * torch.polar(ones, fine)


def build_vandermonde(spec: VandermondeSpec) -> ComplexMatrix:
    return exponential_matrix(spec.nodes, np.arange(spec.N + 1))


def build_centered(spec) -> ComplexMatrix:
    N = spec.N
    if N % 2 or N < 2:
        raise InvalidArgumentError(f"the centered Vandermonde matrix needs an even N >= 2, got {N}")
    M = N // 2
    return exponential_matrix(spec.nodes, np.arange(-M, M + 1)) / math.sqrt(N)


def dirichlet_kernel(t, M):
    """Dirichlet kernel sum_{k=-M}^{M} e^{ikt} in closed form."""
    if M < 0:
        raise InvalidArgumentError(f"kernel order must be non-negative, got {M}")
    t = np.asarray(wrap_difference(np.asarray(t, dtype=float)), dtype=float)
    half = np.sin(t / 2)
    near_zero = np.abs(half) < DIRICHLET_SWITCH
    safe = np.where(near_zero, 1.0, half)
    value = np.sin((M + 0.5) * t) / safe
    # second order expansion at the removable singularity
    limit = (2 * M + 1) * (1.0 - M * (M + 1) * t ** 2 / 6.0)
    value = np.where(near_zero, limit, value)
    if value.ndim == 0:
        return float(value)
    return value


def gram_matrix(spec: GramSpec) -> ComplexMatrix:
    differences = spec.nodes.differences()
    gram = dirichlet_kernel(differences, spec.M) / (2 * spec.M)
    gram = as_matrix(np.atleast_2d(gram))
    return (gram + gram.conj().T) / 2


def f_moment(M, k):
    if M < 1 or k < 0:
        raise InvalidArgumentError(f"F(M, k) needs M >= 1 and k >= 0, got M = {M}, k = {k}")
    ratios = np.arange(-M, M + 1) / M
    return math.fsum(ratios ** (2 * k)) / (2 * M)


def gram_taylor(spec: GramSpec, K=DEFAULT_TAYLOR_ORDER) -> ComplexMatrix:
    epsilon = spec.epsilon
    if epsilon >= 1:
        raise OutOfRegimeError(f"the Taylor form of the Gram matrix needs epsilon < 1, got {epsilon:.4g}")
    h = spec.h
    scaled = spec.nodes.differences() / h if h > 0 else np.zeros((spec.nodes.size, spec.nodes.size))
    total = np.zeros_like(scaled)
    for k in range(K + 1):
        coefficient = (-1) ** k * epsilon ** (2 * k) * f_moment(spec.M, k) / math.factorial(2 * k)
        total = total + coefficient * scaled ** (2 * k)
    return as_matrix(total)
